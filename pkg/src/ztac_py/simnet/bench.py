"""
Wall clock microbenchmarks, one row per cost model term. Numbers are local to
the machine running them and never enter a run report.
"""

import random
import time
from typing import Callable, Dict, List, Tuple

import polars as pl

from ztac_py.crypto_core.primitives import (
    NONCE_LENGTH,
    SymKey,
    ecdh_keygen,
    ecdh_shared,
    hash_bytes,
    sig_verify,
    sign,
    signing_keygen,
    sym_encrypt,
)
from ztac_py.pairing import ibbe, kp_abe
from ztac_py.pairing.access_tree import parse_policy
from ztac_py.pairing.ibbe import IbbeParams, ibbe_dec, ibbe_enc, ibbe_key_ext, ibbe_setup
from ztac_py.pairing.kp_abe import AttributeUniverse, abe_decrypt, abe_encrypt, abe_keygen, abe_setup
from ztac_py.runtime_utils.op_tally import COST_MODEL_TERMS, Term, suspended
from ztac_py.runtime_utils.process_logger import ProcessLogger

BENCH_SEED = 2024
DEFAULT_ITERATIONS = 5
PAYLOAD = bytes(range(64))

UNIVERSE = ("vital", "ecg", "motion", "temperature")
POLICY = "2of(vital, ecg, motion)"
RECEIVERS = ("u1", "u2", "u3", "u4")

SAMPLE_SCHEMA = {"term": pl.String, "operation": pl.String, "sample": pl.Int64, "us": pl.Float64}

TIMING_SCHEMA = {
    "term": pl.String,
    "operation": pl.String,
    "iterations": pl.Int64,
    "median_us": pl.Float64,
    "p95_us": pl.Float64,
}


def _workloads(rng: random.Random) -> Dict[Term, Tuple[str, Callable[[int], object]]]:
    """operation label and a callable taking the iteration index, per term"""
    key = SymKey(rng.randbytes(32))
    alice, bob = ecdh_keygen(rng), ecdh_keygen(rng)
    signer = signing_keygen(rng)
    signature = sign(signer, PAYLOAD)

    universe = AttributeUniverse.of(UNIVERSE)
    abe_public, abe_master = abe_setup(kp_abe.DEFAULT_SECURITY_PARAMETER, universe, rng)
    policy = parse_policy(POLICY)
    abe_key = abe_keygen(policy, abe_master, rng)
    abe_ciphertext = abe_encrypt(PAYLOAD, ("vital", "ecg"), abe_public, rng)

    ibbe_public, ibbe_master = ibbe_setup(IbbeParams(max_receivers=len(RECEIVERS)), rng)
    identity_key = ibbe_key_ext(ibbe_public, ibbe_master, RECEIVERS[0])
    header, _ = ibbe_enc(RECEIVERS, ibbe_public, rng)

    return {
        Term.ENC: (
            "aes-256-gcm seal, 64 bytes",
            lambda i: sym_encrypt(key, PAYLOAD, i.to_bytes(NONCE_LENGTH, "big")),
        ),
        Term.SHA: ("sha-256, 64 bytes", lambda _: hash_bytes(PAYLOAD)),
        Term.ECDH: ("p-256 ecdh + hkdf", lambda _: ecdh_shared(alice, bob.public, b"bench")),
        Term.VER: ("ed25519 verify", lambda _: sig_verify(signer.verification, PAYLOAD, signature)),
        Term.ABE_SETUP: (
            f"{kp_abe.CONSTRUCTION} setup, {len(UNIVERSE)} attributes",
            lambda _: abe_setup(kp_abe.DEFAULT_SECURITY_PARAMETER, universe, rng),
        ),
        Term.ABE_KEYGEN: (f"keygen for {POLICY}", lambda _: abe_keygen(policy, abe_master, rng)),
        Term.ABE_ENC: ("encrypt under 2 attributes", lambda _: abe_encrypt(PAYLOAD, ("vital", "ecg"), abe_public, rng)),
        Term.ABE_DEC: ("decrypt, 2 of 3 leaves", lambda _: abe_decrypt(abe_ciphertext, abe_key)),
        Term.IBBE: (
            f"{ibbe.CONSTRUCTION} decapsulate, {len(RECEIVERS)} receivers",
            lambda _: ibbe_dec(RECEIVERS, RECEIVERS[0], identity_key, header, ibbe_public),
        ),
    }


def _time(operation: Callable[[int], object], iterations: int) -> List[float]:
    samples = []
    for index in range(iterations):
        started = time.perf_counter()
        operation(index)
        samples.append((time.perf_counter() - started) * 1e6)
    return samples


def bench_primitives(iterations: int = DEFAULT_ITERATIONS) -> pl.DataFrame:
    """
    median and 95th percentile in microseconds for every cost model term.
    runs outside of any operation tally
    """
    if iterations < 1:
        raise ValueError(f"iterations must be at least 1, got {iterations}")

    with ProcessLogger("bench_primitives", iterations=iterations) as process_logger:
        rows = []
        with suspended():
            workloads = _workloads(random.Random(BENCH_SEED))
            for term in COST_MODEL_TERMS:
                operation, run = workloads[term]
                for index, sample in enumerate(_time(run, iterations)):
                    rows.append({"term": term.value, "operation": operation, "sample": index, "us": sample})

        samples = pl.DataFrame(rows, schema=SAMPLE_SCHEMA)
        order = {term.value: index for index, term in enumerate(COST_MODEL_TERMS)}
        timings = (
            samples.group_by(["term", "operation"], maintain_order=True)
            .agg(
                pl.len().cast(pl.Int64).alias("iterations"),
                pl.col("us").median().round(1).alias("median_us"),
                pl.col("us").quantile(0.95, interpolation="nearest").round(1).alias("p95_us"),
            )
            .with_columns(pl.col("term").replace_strict(order, return_dtype=pl.Int64).alias("_order"))
            .sort("_order")
            .drop("_order")
        )
        process_logger.add_metadata(print_log=False, terms=timings.height)

    return timings.select(list(TIMING_SCHEMA))


def ibbe_header_size() -> int:
    """encoded size of a broadcast header for the benchmark receiver set"""
    rng = random.Random(BENCH_SEED)
    with suspended():
        public, _ = ibbe_setup(IbbeParams(max_receivers=len(RECEIVERS)), rng)
        header, _ = ibbe_enc(RECEIVERS, public, rng)
    return len(header.to_bytes())


def constructions() -> List[str]:
    """declaration of the active schemes and the measured IBBE header size"""
    return [
        f"kp_abe={kp_abe.CONSTRUCTION}",
        f"ibbe={ibbe.CONSTRUCTION}",
        f"ibbe_header_bytes={ibbe_header_size()}",
    ]


def render_bench(timings: pl.DataFrame) -> str:
    """bench output: the construction declaration and the TIMINGS section"""
    lines = ["# ztac primitive benchmark", *constructions(), "", "[TIMINGS]", timings.write_csv().rstrip("\n")]
    return "\n".join(lines) + "\n"
