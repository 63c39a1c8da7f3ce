"""
LangGraph nodes for the scenario pipeline
"""
