"""
End-to-end scenario tests: full stand-up runs on the desk agents.
"""
