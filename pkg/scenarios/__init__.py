# Scenario-specific experiments
