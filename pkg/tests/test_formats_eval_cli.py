"""File formats, component matching, perturbation sweeps, image compression and the CLI."""

import csv
import hashlib
import json

import numpy as np
import pytest

from tensorlvm.cli import main
from tensorlvm.direct import AlsConfig
from tensorlvm.errors import ValidationError
from tensorlvm.evaluation import match_by_distance, match_components, perturbation_sweep
from tensorlvm.formats import (
    factors_json, parse_factors, parse_ppm, ppm_bytes, read_corpus, read_factors, read_ppm,
    write_corpus, write_dten, write_factors, write_ppm,
)
from tensorlvm.imaging import compress_array, compress_image, parameter_count, to_image
from tensorlvm.instances import orthogonal_instance
from tensorlvm.power import PowerConfig, decompose_orthogonal
from tensorlvm.tensor import KruskalForm


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------- formats

class TestFactorsJson:
    def test_round_trip_bytes(self, tmp_path, gen):
        K = KruskalForm.from_unnormalized(np.array([2.0, -1.5]), [gen.standard_normal((3, 2)),
                                                                   gen.standard_normal((4, 2)),
                                                                   gen.standard_normal((2, 2))])
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_factors(a, K, {"note": "x"})
        K2, report = read_factors(a)
        write_factors(b, K2, report)
        assert a.read_bytes() == b.read_bytes()

    def test_signs_folded(self, gen):
        V = np.linalg.qr(gen.standard_normal((3, 2)))[0]
        K = KruskalForm.symmetric(np.array([1.0, -2.0]), V)
        doc = json.loads(factors_json(K))
        assert all(w > 0 for w in doc["weights"])
        K2, _ = parse_factors(factors_json(K))
        from tensorlvm.tensor import kruskal_to_tensor
        np.testing.assert_allclose(kruskal_to_tensor(K2), kruskal_to_tensor(K), atol=1e-14)

    def test_schema(self, gen):
        K = KruskalForm.symmetric(np.array([1.0]), np.array([[1.0], [0.0]]))
        doc = json.loads(factors_json(K, {"a": 1}))
        assert set(doc) == {"rank", "weights", "factors", "report"}
        assert doc["factors"][0] == [[1.0, 0.0]]

    @pytest.mark.parametrize("text", ["{", "{}", '{"rank": 2, "weights": [1], "factors": [[[1, 0]]]}',
                                      '{"rank": 1, "weights": [1], "factors": "x"}'])
    def test_malformed(self, text):
        with pytest.raises(ValidationError):
            parse_factors(text)


class TestPpm:
    def test_round_trip(self, tmp_path, gen):
        img = gen.integers(0, 256, (5, 7, 3)).astype(np.uint8)
        path = tmp_path / "x.ppm"
        write_ppm(path, img)
        np.testing.assert_array_equal(read_ppm(path), img)
        assert path.read_bytes() == ppm_bytes(read_ppm(path))

    def test_comments_in_header(self):
        buf = b"P6\n# made by hand\n2 1\n255\n" + bytes(range(6))
        np.testing.assert_array_equal(parse_ppm(buf).ravel(), np.arange(6))

    @pytest.mark.parametrize("buf", [
        b"P3\n1 1\n255\n000",
        b"P6\n2 2\n255\n" + bytes(5),
        b"P6\n1 1\n65535\n" + bytes(6),
        b"P6\n0 1\n255\n",
        b"P6\nx 1\n255\n" + bytes(3),
        b"P6\n1",
    ])
    def test_malformed(self, buf):
        with pytest.raises(ValidationError):
            parse_ppm(buf)

    def test_write_rejects_float(self):
        with pytest.raises(ValidationError):
            ppm_bytes(np.zeros((2, 2, 3)))


class TestCorpus:
    def test_round_trip(self, tmp_path):
        docs = [[0, 1, 2], [3, 3, 3, 4]]
        write_corpus(tmp_path / "c.txt", docs)
        assert read_corpus(tmp_path / "c.txt") == docs

    @pytest.mark.parametrize("text", ["", "\n\n", "1 2 x\n", "1 -2 3\n"])
    def test_malformed(self, tmp_path, text):
        (tmp_path / "c.txt").write_text(text)
        with pytest.raises(ValidationError):
            read_corpus(tmp_path / "c.txt")


# ---------------------------------------------------------------- matching

class TestMatching:
    def test_identity(self, gen):
        V = np.linalg.qr(gen.standard_normal((5, 4)))[0]
        m = match_components(V, V)
        np.testing.assert_array_equal(m.permutation, np.arange(4))
        np.testing.assert_allclose(m.errors, 0, atol=1e-15)

    def test_reversed_negated(self, gen):
        V = np.linalg.qr(gen.standard_normal((5, 4)))[0]
        m = match_components(V, -V[:, ::-1])
        np.testing.assert_array_equal(m.permutation, [3, 2, 1, 0])
        np.testing.assert_array_equal(m.signs, -1)
        np.testing.assert_allclose(m.errors, 0, atol=1e-15)

    def test_small_noise(self, gen):
        V = np.linalg.qr(gen.standard_normal((8, 5)))[0]
        perm = gen.permutation(5)
        est = V[:, perm] + 0.01 * gen.standard_normal((8, 5))
        m = match_components(V, est / np.linalg.norm(est, axis=0))
        assert m.max_error <= 0.05
        np.testing.assert_array_equal(perm[m.permutation], np.arange(5))

    def test_bijection(self, gen):
        m = match_components(gen.standard_normal((4, 6)), gen.standard_normal((4, 6)))
        assert sorted(m.permutation) == list(range(6))
        assert np.all(m.errors >= 0)

    def test_distance_matching(self):
        truth = np.array([[1.0, 0.0], [0.0, 1.0]])
        m = match_by_distance(truth, truth[:, ::-1] + 0.1, ord=1)
        np.testing.assert_array_equal(m.permutation, [1, 0])
        np.testing.assert_allclose(m.errors, 0.2)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            match_components(np.eye(3), np.eye(3)[:, :2])


# ---------------------------------------------------------------- sweeps

def _orthogonal_sweep(csv_path=None):
    builder = lambda s: orthogonal_instance(10, 10, s)

    def decomposer(T, M):
        K, _ = decompose_orthogonal(T, 10, PowerConfig(seed=0))
        return K.factors[0], K.weights
    return perturbation_sweep(builder, decomposer, [0.0, 1e-5, 1e-4, 1e-3], [0, 1, 2], csv_path)


@pytest.fixture(scope="module")
def sweep_result(tmp_path_factory):
    path = tmp_path_factory.mktemp("sweep") / "sweep.csv"
    return _orthogonal_sweep(path), path


class TestSweep:
    def test_zero_eps(self, sweep_result):
        rows = [r for r in sweep_result[0].rows if r["eps"] == 0]
        assert all(r["status"] == "ok" and r["vector_error"] <= 1e-8 for r in rows)

    def test_monotone_and_slope(self, sweep_result):
        result = sweep_result[0]
        assert result.monotone
        assert abs(result.slope - 1) <= 0.3

    def test_csv(self, sweep_result):
        with open(sweep_result[1], newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 12
        assert list(rows[0]) == ["eps", "seed", "vector_error", "weight_error", "status"]
        assert [float(r["eps"]) for r in rows] == sorted(float(r["eps"]) for r in rows)

    def test_failures_recorded(self):
        from tensorlvm.errors import NumericalError

        def decomposer(T, M):
            raise NumericalError("boom")
        result = perturbation_sweep(lambda s: orthogonal_instance(3, 2, s), decomposer, [0.0], [0])
        assert result.rows[0]["status"].startswith("failed")

    def test_empty_grid(self):
        with pytest.raises(ValidationError):
            perturbation_sweep(None, None, [], [0])


# ---------------------------------------------------------------- image

class TestImage:
    def test_parameter_count(self):
        assert parameter_count((768, 1024, 3), 50) == 89_800
        assert 768 * 1024 * 3 / 89_800 >= 26

    def test_constant_rank_one(self):
        img = np.full((12, 16, 3), 0, dtype=np.uint8)
        img[...] = [200, 120, 40]
        _, _, stats, _ = compress_array(img, 1)
        assert stats["relative_error"] <= 1e-6
        assert stats["parameters"] == 12 + 16 + 3 + 1

    def test_to_image(self):
        out = to_image(np.array([[[-1.0, 0.0, 1.0]]]))
        np.testing.assert_array_equal(out, [[[0, 127, 255]]])
        assert not to_image(np.ones((1, 1, 3))).any()

    def test_files(self, tmp_path, gen):
        img = gen.integers(0, 256, (10, 14, 3)).astype(np.uint8)
        write_ppm(tmp_path / "in.ppm", img)
        _, out, stats = compress_image(tmp_path / "in.ppm", 3, AlsConfig(rank=3, max_iters=20),
                                       ppm_out=tmp_path / "out.ppm", factors_out=tmp_path / "f.json")
        assert read_ppm(tmp_path / "out.ppm").shape == img.shape
        K, report = read_factors(tmp_path / "f.json")
        assert K.rank == 3 and report["image"]["parameters"] == stats["parameters"]

    def test_errors(self, tmp_path):
        with pytest.raises(ValidationError):
            compress_array(np.zeros((2, 2, 3)), 0)
        (tmp_path / "bad.ppm").write_bytes(b"P5\n1 1\n255\n\x00")
        with pytest.raises(ValidationError):
            compress_image(tmp_path / "bad.ppm", 1)


# ---------------------------------------------------------------- cli

@pytest.fixture
def orth_file(tmp_path):
    inst = orthogonal_instance(6, 4, seed=3)
    write_dten(tmp_path / "t.dten", inst["tensor"])
    return tmp_path / "t.dten", inst


class TestCli:
    def test_decompose_golden_path(self, orth_file, tmp_path, capsys):
        path, inst = orth_file
        out = tmp_path / "f.json"
        assert main(["decompose", "--method", "power", "--rank", "4", "--in", str(path),
                     "--out", str(out)]) == 0
        K, report = read_factors(out)
        assert match_components(inst["vectors"], K.factors[0]).max_error <= 1e-6
        assert report["relative_error"] <= 1e-6
        assert json.loads(capsys.readouterr().out)["rank"] == 4

    @pytest.mark.parametrize("method", ["power", "als", "simdiag"])
    def test_deterministic(self, orth_file, tmp_path, method):
        path, _ = orth_file
        digests = []
        for name in ("a.json", "b.json"):
            assert main(["decompose", "--method", method, "--rank", "4", "--seed", "5",
                         "--in", str(path), "--out", str(tmp_path / name)]) == 0
            digests.append(_digest(tmp_path / name))
        assert digests[0] == digests[1]

    def test_whiten_power_needs_second_moment(self, orth_file, tmp_path, capsys):
        path, _ = orth_file
        code = main(["decompose", "--method", "whiten-power", "--rank", "4", "--in", str(path),
                     "--out", str(tmp_path / "f.json")])
        assert code == 2
        assert "second-moment" in capsys.readouterr().err

    def test_whiten_power(self, tmp_path):
        from tensorlvm.instances import nonorthogonal_instance
        inst = nonorthogonal_instance(6, 3, seed=1)
        write_dten(tmp_path / "t.dten", inst["tensor"])
        write_dten(tmp_path / "m.dten", inst["second_moment"])
        assert main(["decompose", "--method", "whiten-power", "--rank", "3", "--in", str(tmp_path / "t.dten"),
                     "--second-moment", str(tmp_path / "m.dten"), "--out", str(tmp_path / "f.json")]) == 0
        _, report = read_factors(tmp_path / "f.json")
        assert report["relative_error"] <= 1e-8

    def test_numerical_failure_exit(self, tmp_path, capsys):
        g = np.random.default_rng(3)
        A, B, C = g.standard_normal((6, 4)), g.standard_normal((6, 4)), g.standard_normal((6, 4))
        C[:, 1] = 2 * C[:, 0]
        write_dten(tmp_path / "t.dten", np.einsum("aj,bj,cj->abc", A, B, C))
        code = main(["decompose", "--method", "simdiag", "--rank", "4", "--in", str(tmp_path / "t.dten"),
                     "--out", str(tmp_path / "f.json")])
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_missing_and_malformed_input(self, tmp_path):
        assert main(["decompose", "--method", "power", "--rank", "1", "--in", str(tmp_path / "none"),
                     "--out", str(tmp_path / "f.json")]) == 2
        (tmp_path / "bad.dten").write_bytes(b"XXXX")
        assert main(["decompose", "--method", "power", "--rank", "1", "--in", str(tmp_path / "bad.dten"),
                     "--out", str(tmp_path / "f.json")]) == 2

    def test_learn_topic_end_to_end(self, tmp_path):
        g = np.random.default_rng(0)
        mu = g.dirichlet(np.ones(10), 3).T
        spec = {"w": [0.3, 0.3, 0.4], "mu": mu.tolist()}
        (tmp_path / "spec.json").write_text(json.dumps(spec))
        assert main(["generate", "--family", "topic", "--spec", str(tmp_path / "spec.json"),
                     "--n", "100000", "--seed", "1", "--out", str(tmp_path / "data")]) == 0
        assert main(["learn", "--family", "topic", "--rank", "3", "--dim", "10",
                     "--in", str(tmp_path / "data" / "corpus.txt"), "--truth", str(tmp_path / "spec.json"),
                     "--out", str(tmp_path / "model.json")]) == 0
        model = json.loads((tmp_path / "model.json").read_text())
        assert model["match"]["norm"] == 1
        assert model["match"]["max_error"] <= 0.05
        assert np.asarray(model["parameters"]["mu"]).shape == (10, 3)

    FAMILY_SPECS = {
        "topic": {"w": [0.5, 0.5], "mu": [[0.7, 0.1], [0.2, 0.2], [0.1, 0.7]]},
        "gmm": {"w": [0.5, 0.5], "means": [[1, -1], [0, 2], [2, 0]], "sigma": 0.3},
        "gmm-diff": {"w": [0.5, 0.5], "means": [[1, -1], [0, 2], [2, 0]], "sigma": [0.3, 0.5]},
        "lda": {"alpha": [0.5, 1.0], "mu": [[0.7, 0.1], [0.2, 0.2], [0.1, 0.7]]},
        "multiview": {"w": [0.5, 0.5], "means": [[[1, 0], [0, 1]]] * 3, "sigma": 0.1},
        "hmm": {"pi": [0.5, 0.5], "T": [[0.8, 0.3], [0.2, 0.7]], "O": [[0.7, 0.1], [0.2, 0.2], [0.1, 0.7]]},
        "ica": {"A": [[1, 0.5], [0, 1], [0.3, 0.2]], "kurtosis": [-2, 3]},
        "noisyor": {"rho": 0.2, "W": [[0.5, 1.0], [1.2, 0.3], [0.7, 0.9]]},
    }
    FAMILY_FILES = {"topic": "corpus.txt", "lda": "corpus.txt", "hmm": "sequences.txt",
                    "multiview": "x3.dten"}

    @pytest.mark.parametrize("family", list(FAMILY_SPECS))
    def test_generate_all_families(self, tmp_path, family):
        (tmp_path / "spec.json").write_text(json.dumps(self.FAMILY_SPECS[family]))
        out = tmp_path / "data"
        assert main(["generate", "--family", family, "--spec", str(tmp_path / "spec.json"),
                     "--n", "50", "--seed", "2", "--out", str(out)]) == 0
        assert (out / self.FAMILY_FILES.get(family, "samples.dten")).exists()
        assert (out / "m2.dten").exists()
        assert (out / ("m4.dten" if family == "ica" else "m3.dten")).exists()

    def test_generate_bad_spec(self, tmp_path):
        (tmp_path / "spec.json").write_text(json.dumps({"w": [0.5, 0.6], "mu": [[1, 0], [0, 1]]}))
        assert main(["generate", "--family", "topic", "--spec", str(tmp_path / "spec.json"),
                     "--n", "5", "--out", str(tmp_path / "d")]) == 2
        (tmp_path / "spec.json").write_text(json.dumps({"w": [1.0]}))
        assert main(["generate", "--family", "topic", "--spec", str(tmp_path / "spec.json"),
                     "--n", "5", "--out", str(tmp_path / "d")]) == 2

    def test_sweep(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        assert main(["sweep", "--dim", "6", "--rank", "6", "--seeds", "0", "1", "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["rows"] == 8 and abs(summary["slope"] - 1) <= 0.3
        assert out.read_text().startswith("eps,seed,vector_error,weight_error,status")

    def test_compress_image(self, tmp_path, gen):
        write_ppm(tmp_path / "in.ppm", gen.integers(0, 256, (8, 9, 3)).astype(np.uint8))
        assert main(["compress-image", "--rank", "2", "--iters", "10", "--factors", str(tmp_path / "f.json"),
                     str(tmp_path / "in.ppm"), str(tmp_path / "out.ppm")]) == 0
        assert read_ppm(tmp_path / "out.ppm").shape == (8, 9, 3)
        assert main(["compress-image", "--rank", "0", str(tmp_path / "in.ppm"), str(tmp_path / "o.ppm")]) == 2
