# Utility scripts

