# Test configuration file for pytest