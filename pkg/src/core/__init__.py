"""Core modules for pgAdminTUI."""