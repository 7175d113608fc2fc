"""Utility modules: logging, exceptions, pydantic document bases and seeding."""
