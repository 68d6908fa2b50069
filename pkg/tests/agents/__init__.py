# Agents tests package 