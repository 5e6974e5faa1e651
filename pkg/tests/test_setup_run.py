import numpy as np  # type: ignore
import pytest

from cmc import setup_run
from cmc.exceptions import InputError
from cmc.method import Method
from cmc.model import ChiDistribution, ModelParams, QMatrix
from cmc.panel import RatingPanel, new_observations


def test_config_text():
    values = setup_run.parse_config_text(
        """
        # PSO run
        method = ea
        swarm-size = 20   # dashes
        var_threshold = 1e-4
        out-dir = results
        classes = 3
        """
    )
    assert values == {
        "method": Method.EA,
        "swarm_size": 20,
        "var_threshold": 1e-4,
        "out_dir": "results",
        "classes": 3,
    }


@pytest.mark.parametrize("text", ["colour = red", "iters = many", "iters 10", "method = simplex"])
def test_bad_config_text(text):
    with pytest.raises(InputError):
        setup_run.parse_config_text(text)


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("iters = 40\nseed = 9\n")
    config = setup_run.load_config(str(path), {"seed": 3})
    assert (config.iters, config.seed, config.swarm_size) == (40, 3, 200)
    assert config.swarm_config().max_iterations == 40
    assert config.ea_config(seed=5).rng_seed == 5
    with pytest.raises(InputError):
        setup_run.load_config(str(tmp_path / "missing.cfg"), {})


def test_matrix_file_is_exact(tmp_path, example_matrix):
    path = str(tmp_path / "matrix.csv")
    setup_run.write_matrix(example_matrix, path)
    np.testing.assert_allclose(setup_run.read_matrix(path).entries, example_matrix.entries, rtol=0, atol=1e-15)


def test_panel_file(tmp_path):
    panel = RatingPanel(new_observations([("007", 2, 2001, 1), ("007", 2, 2002, 3), ("x", 1, 2001, 2)]))
    path = str(tmp_path / "panel.csv")
    setup_run.write_panel(panel, path)
    with open(path) as f:
        assert f.readline().strip() == "company_id,sector,year,rating"
    again = setup_run.read_panel(path)
    np.testing.assert_array_equal(again.observations, panel.observations)


@pytest.mark.parametrize(
    "content",
    [
        "",
        "company_id,sector,year,rating\n",
        "company,sector,year,rating\na,1,1,1\n",
        "company_id,sector,year,rating\na,1,1,\n",
        "company_id,sector,year,rating\na,1,2001,1\na,1,2002,2.7\n",
        "company_id,sector,year,rating\na,1.5,2001,1\n",
        "company_id,sector,year,rating\na,1,2001.5,1\n",
        "company_id,sector,year,rating\na,1,2001,high\n",
    ],
)
def test_bad_panel_files(tmp_path, content):
    path = tmp_path / "panel.csv"
    path.write_text(content)
    with pytest.raises(InputError):
        setup_run.read_panel(str(path))


def test_chi_file(tmp_path):
    chi = ChiDistribution([0.1, 0.2, 0.3, 0.4])
    path = str(tmp_path / "chi.csv")
    setup_run.write_chi(chi, path)
    with open(path) as f:
        assert f.readline().strip() == "0,0.10000000000000001"
    np.testing.assert_array_equal(setup_run.read_chi(path).probs, chi.probs)


def test_result_file(tmp_path):
    params = ModelParams(QMatrix([[0.1, 0.2], [0.3, 0.4]]), ChiDistribution([0.1, 0.2, 0.3, 0.4]))
    path = str(tmp_path / "result.json")
    setup_run.write_result(setup_run.result_document(params, -12.5, "pso", 4, 150), path)
    again, document = setup_run.read_result(path)
    np.testing.assert_array_equal(again.to_vector(), params.to_vector())
    assert document["loglik"] == -12.5 and document["iterations"] == 150
    assert document["q"] == [0.1, 0.2, 0.3, 0.4]


def test_initial_state_skips_defaulted_companies():
    panel = RatingPanel(
        new_observations([("a", 1, 1, 1), ("a", 1, 2, 2), ("b", 2, 1, 1), ("b", 2, 2, 3), ("c", 2, 1, 2)]),
        default_class=3,
    )
    ids, classes, sectors = setup_run.initial_state(panel, 3)
    assert ids == ["a", "c"]
    assert classes.tolist() == [2, 2]
    assert sectors.tolist() == [1, 2]


def test_load_engine_rejects_other_files(tmp_path):
    path = tmp_path / "junk.xz"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(InputError):
        setup_run.load_engine(str(path))


@pytest.mark.parametrize(
    "overrides",
    [{"functionals": 0}, {"k_directions": 0}, {"l_samples": -1}, {"replications": 0}, {"runs": 0}, {"sectors": 0}, {"horizon": -1}],
)
def test_counts_must_be_positive(overrides):
    with pytest.raises(InputError):
        setup_run.load_config(None, overrides)


def test_panel_file_with_whole_float_ratings(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text("company_id,sector,year,rating\na,1,2001,1.0\na,1,2002,3.0\n")
    assert setup_run.read_panel(str(path)).observations["rating"].tolist() == [1, 3]
