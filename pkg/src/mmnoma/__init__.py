"""Multi-AP mmWave-NOMA resource allocation for crowded venues.

Human-body blockage geometry, multipath channels, worst-connection-swapping
user scheduling, simulated-annealing antenna splits, ZF precoding and DC
power allocation, plus brute-force references and a seeded Monte Carlo
harness.
"""

__version__ = "0.1.0"
