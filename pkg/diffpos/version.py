"""Define the version of the diffpos package"""
__version__ = "0.1.0"
