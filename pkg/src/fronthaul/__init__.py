"""Fronthaul bit allocation for cell-free massive MIMO uplink"""
