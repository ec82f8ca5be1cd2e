"""
Test package for the mortgage deed API.
""" 