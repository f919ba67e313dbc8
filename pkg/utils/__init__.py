"""
Utility scripts for the lorlab project.

This package contains standalone scripts for:
- Generating closed-form reference tables for regression comparison and plotting
"""
