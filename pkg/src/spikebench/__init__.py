"""Distributed spiking-network simulator and benchmark harness.

The package simulates networks of leaky integrate-and-fire neurons with
spike-frequency adaptation on a 1 ms event grid, exchanges spikes between
ranks in a compact 12-byte wire format, and reports per-phase timing plus
energy-to-solution figures derived from external power traces.
"""

from spikebench.backends import available_backends, resolve_backend
from spikebench.connectivity import NetworkSpec, Partition, Synapse, SynapseTable
from spikebench.engine import RunReport, SimConfig, StepProfile
from spikebench.exchange import AxonalSpike, DelayQueue
from spikebench.model import ExternalDrive, NeuronParams, NeuronState

__all__ = [
    "AxonalSpike",
    "DelayQueue",
    "ExternalDrive",
    "NetworkSpec",
    "NeuronParams",
    "NeuronState",
    "Partition",
    "RunReport",
    "SimConfig",
    "StepProfile",
    "Synapse",
    "SynapseTable",
    "available_backends",
    "resolve_backend",
]

__version__ = "0.1.0"
