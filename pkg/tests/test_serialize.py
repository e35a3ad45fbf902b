"""File formats: binary matrix container, CSV round trips, bundles."""
from __future__ import annotations

import json
import struct
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kqrk.linalg import DenseMatrix, row_normalize
from kqrk.problems import GenSpec, generate
from kqrk.serialize import (
    ContainerFormatError,
    MATRIX_FILENAME,
    fmt_float,
    load_matrix,
    load_matrix_csv,
    load_problem,
    load_vector_csv,
    save_matrix,
    save_matrix_csv,
    save_problem,
    save_trace_csv,
    save_vector_csv,
    sha256_file,
    spec_from_dict,
    spec_to_dict,
)
from kqrk.solvers import SolverConfig, run


class TestFloatFormat:
    @given(st.floats(allow_nan=False, allow_infinity=False))
    @settings(max_examples=300)
    def test_17g_round_trips(self, x):
        assert float(fmt_float(x)) == x

    def test_examples(self):
        assert fmt_float(0.1) == "0.10000000000000001"
        assert fmt_float(1.0) == "1"


class TestMatrixContainer:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        dm, _ = row_normalize(rng.standard_normal((13, 4)))
        path = tmp_path / "a.kqrk"
        save_matrix(path, dm)
        back = load_matrix(path)
        assert back.row_normalized == dm.row_normalized
        np.testing.assert_array_equal(back.data, dm.data)

    def test_header_layout(self, tmp_path):
        dm = DenseMatrix(np.arange(6, dtype=np.float64).reshape(2, 3) + 1.0)
        path = tmp_path / "a.kqrk"
        save_matrix(path, dm)
        blob = path.read_bytes()
        magic, version, m, n, flag = struct.unpack_from("<4sIQQB", blob)
        assert magic == b"KQRK"
        assert version == 1
        assert (m, n, flag) == (2, 3, 0)
        entries = np.frombuffer(blob, dtype="<f8", offset=struct.calcsize("<4sIQQB"))
        np.testing.assert_array_equal(entries.reshape(2, 3), dm.data)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.kqrk"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(ContainerFormatError):
            load_matrix(path)

    def test_truncated(self, tmp_path):
        rng = np.random.default_rng(1)
        dm = DenseMatrix(rng.standard_normal((4, 4)))
        path = tmp_path / "a.kqrk"
        save_matrix(path, dm)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ContainerFormatError):
            load_matrix(path)

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        dm = DenseMatrix(rng.standard_normal((5, 3)))
        path = tmp_path / "a.csv"
        save_matrix_csv(path, dm)
        back = load_matrix_csv(path)
        np.testing.assert_array_equal(back.data, dm.data)


class TestVectorCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(17) * 1e8
        path = tmp_path / "v.csv"
        save_vector_csv(path, "b", v)
        back = load_vector_csv(path)
        np.testing.assert_array_equal(back, v)
        assert path.read_text().splitlines()[0] == "b"


class TestProblemBundle:
    def test_round_trip(self, tmp_path):
        spec = GenSpec(m=24, n=4, beta=Fraction(1, 8), corruption_scale=30.0, seed=9)
        prob = generate(spec)
        save_problem(tmp_path / "p", prob, spec)
        back, manifest = load_problem(tmp_path / "p")
        np.testing.assert_array_equal(back.system.data, prob.system.data)
        for name in ("x_star", "b_t", "eta", "xi", "b"):
            np.testing.assert_array_equal(getattr(back, name), getattr(prob, name))
        assert manifest["kind"] == "problem"
        assert spec_from_dict(manifest["spec"]) == spec

    def test_manifest_checksums_match(self, tmp_path):
        spec = GenSpec(m=10, n=2, seed=0)
        save_problem(tmp_path / "p", generate(spec), spec)
        manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
        for name, expected in manifest["checksums"].items():
            assert sha256_file(tmp_path / "p" / name) == expected
        assert MATRIX_FILENAME in manifest["checksums"]

    def test_spec_dict_round_trip(self):
        spec = GenSpec(
            m=12, n=3, beta=Fraction(1, 4), corruption_scale=5.0,
            noise_stddev=0.5, ensemble="uniform", disjoint_support=True,
            signed_corruption=True, seed=42,
        )
        assert spec_from_dict(spec_to_dict(spec)) == spec

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ContainerFormatError):
            load_problem(tmp_path)


class TestTraceCsv:
    def test_columns_and_blanks(self, tmp_path):
        prob = generate(GenSpec(m=10, n=2, seed=1))
        trace = run(prob, SolverConfig(method="dqrk", q=Fraction(4, 5), q0=Fraction(1, 2), iterations=5))
        path = tmp_path / "t.csv"
        save_trace_csv(path, trace)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "k,sq_error,residual_norm,chosen_index,Q0,Q"
        assert len(lines) == 7  # header + states 0..5
        final = lines[-1].split(",")
        assert final[3] == ""  # no step leaves the final state
        assert final[4] != "" and final[5] != ""
        first = lines[1].split(",")
        assert first[0] == "0" and first[3] != ""

    def test_rk_has_no_quantiles(self, tmp_path):
        prob = generate(GenSpec(m=10, n=2, seed=1))
        trace = run(prob, SolverConfig(method="rk", iterations=3))
        path = tmp_path / "t.csv"
        save_trace_csv(path, trace)
        row = path.read_text().strip().splitlines()[1].split(",")
        assert row[4] == "" and row[5] == ""
