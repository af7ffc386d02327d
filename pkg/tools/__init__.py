# Inspection and report-checking tools for model files and benchmark tables
