import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from perfectsim import AtomChain, longrun_oracle
from perfectsim.engine import Sampler

ATOM_RUNS_SEED = 20_000
ORACLE_SEED = 777


@pytest.fixture(scope="session")
def atom_chain():
    return AtomChain()


@pytest.fixture(scope="session")
def atom_sampler(atom_chain):
    return Sampler(atom_chain)


@pytest.fixture(scope="session")
def atom_runs_10k(atom_sampler):
    """The criterion-1 run set: 10^4 perfect samples on consecutive seeds."""
    return [atom_sampler.run(ATOM_RUNS_SEED + i) for i in range(10_000)]


@pytest.fixture(scope="session")
def atom_oracle_10k(atom_chain):
    """Long-burn-in ground truth: burn-in 10^4, thin 20, 10^4 draws."""
    return longrun_oracle(atom_chain, burnin=10_000, n=10_000, seed=ORACLE_SEED, thin=20)
