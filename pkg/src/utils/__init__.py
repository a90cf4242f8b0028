"""Utility modules for pgAdminTUI."""