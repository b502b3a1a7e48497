# __init__.py - package init
