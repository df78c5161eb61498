# Experiment harness: conditions, runs, suites, statistics and sensitivity sweeps
