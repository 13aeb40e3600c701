import numpy as np
import pytest
import scipy.stats

from coexpose import ParseError, generate_synthetic
from coexpose.cli import main as cli_main
from coexpose.dataio import (
    OUTPUT_DIR_ENV,
    build_config,
    load_graph,
    make_items,
    read_config_file,
)
from coexpose.errors import ConfigError
from coexpose.reporting import run_experiment
from coexpose.synth import _POLARIZED_MODE, _POLARIZED_STD


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadGraph:
    def test_two_line_file(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "0\t1\n1\t0\n")
        nodes = write(tmp_path / "n.tsv", "0\t0.5\n1\t-0.5\n")
        g = load_graph(edges, nodes)
        assert g.n == 2 and g.m == 2
        assert g.node_leaning.tolist() == [0.5, -0.5]
        assert g.labels == ("0", "1")

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "# header\n\n0\t1\n")
        nodes = write(tmp_path / "n.tsv", "# nodes\n0\t0.1\n\n1\t0.2\n")
        g = load_graph(edges, nodes)
        assert g.m == 1

    def test_out_of_range_leaning_reports_line(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "0\t1\n")
        nodes = write(tmp_path / "n.tsv", "0\t0.5\n1\t1.5\n")
        with pytest.raises(ParseError) as err:
            load_graph(edges, nodes)
        assert err.value.line == 2

    def test_missing_leaning_for_edge_endpoint(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "0\t1\n0\t9\n")
        nodes = write(tmp_path / "n.tsv", "0\t0.0\n1\t0.0\n")
        with pytest.raises(ParseError, match="no leaning entry") as err:
            load_graph(edges, nodes)
        assert err.value.line == 2

    def test_duplicate_edge_rejected(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "0\t1\n0\t1\n")
        nodes = write(tmp_path / "n.tsv", "0\t0.0\n1\t0.0\n")
        with pytest.raises(ParseError, match="duplicate edge"):
            load_graph(edges, nodes)

    def test_isolated_nodes_are_legal(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "")
        nodes = write(tmp_path / "n.tsv", "solo\t0.3\n")
        g = load_graph(edges, nodes)
        assert g.n == 1 and g.m == 0

    def test_string_ids_map_to_dense_ints(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "alice\tbob\n")
        nodes = write(tmp_path / "n.tsv", "alice\t0.2\nbob\t-0.2\n")
        g = load_graph(edges, nodes)
        assert g.labels == ("alice", "bob")
        assert (int(g.edge_src[0]), int(g.edge_dst[0])) == (0, 1)


class TestMakeItems:
    def test_even_spread_25(self):
        items = make_items(count=25)
        lean = items.item_leaning
        assert lean[0] == -1.0 and lean[-1] == 1.0
        assert np.allclose(np.diff(lean), 2.0 / 24.0)
        assert lean[1] == pytest.approx(-11.0 / 12.0)

    def test_two_items(self):
        assert make_items(count=2).item_leaning.tolist() == [-1.0, 1.0]

    def test_single_item_sits_at_midpoint(self):
        assert make_items(count=1).item_leaning.tolist() == [0.0]

    def test_file_mode(self, tmp_path):
        path = write(tmp_path / "items.tsv", "a\t-0.25\nb\t0.75\n")
        items = make_items(path=path)
        assert items.item_leaning.tolist() == [-0.25, 0.75]
        assert items.labels == ("a", "b")

    def test_exactly_one_source_required(self, tmp_path):
        with pytest.raises(ConfigError):
            make_items()
        with pytest.raises(ConfigError):
            make_items(count=3, path=str(tmp_path / "x"))


class TestSynthetic:
    def test_deterministic_files(self, tmp_path):
        paths = [(tmp_path / f"e{j}.tsv", tmp_path / f"n{j}.tsv") for j in (0, 1)]
        for e, n in paths:
            generate_synthetic(10, 20, "uniform", seed=5,
                               edge_path=e, leaning_path=n)
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    def test_round_trip_structure(self, tmp_path):
        e, n = tmp_path / "e.tsv", tmp_path / "n.tsv"
        generate_synthetic(30, 120, "uniform", seed=9, edge_path=e, leaning_path=n)
        g = load_graph(e, n)
        assert g.n == 30 and g.m == 120
        keys = {(int(g.edge_src[j]), int(g.edge_dst[j])) for j in range(g.m)}
        assert len(keys) == 120 and all(u != v for u, v in keys)

    def test_single_node_means_empty_edge_file(self, tmp_path):
        e, n = tmp_path / "e.tsv", tmp_path / "n.tsv"
        generate_synthetic(1, 0, "uniform", seed=1, edge_path=e, leaning_path=n)
        g = load_graph(e, n)
        assert g.n == 1 and g.m == 0

    def test_polarized_leanings_match_mixture(self, tmp_path):
        e, n = tmp_path / "e.tsv", tmp_path / "n.tsv"
        generate_synthetic(4000, 0, "polarized", seed=3, edge_path=e, leaning_path=n)
        g = load_graph(e, n)
        a, b = (-1 - _POLARIZED_MODE) / _POLARIZED_STD, (1 - _POLARIZED_MODE) / _POLARIZED_STD

        def cdf(x):
            hi = scipy.stats.truncnorm.cdf(x, a, b, loc=_POLARIZED_MODE,
                                           scale=_POLARIZED_STD)
            lo = scipy.stats.truncnorm.cdf(x, -b, -a, loc=-_POLARIZED_MODE,
                                           scale=_POLARIZED_STD)
            return 0.5 * hi + 0.5 * lo

        stat = scipy.stats.kstest(g.node_leaning, cdf)
        assert stat.pvalue > 0.01
        # bimodality: both sides populated, middle sparse
        assert (g.node_leaning < -0.4).mean() > 0.3
        assert (g.node_leaning > 0.4).mean() > 0.3
        assert (np.abs(g.node_leaning) < 0.2).mean() < 0.1

    def test_hub_model_skews_out_degree(self, tmp_path):
        e, n = tmp_path / "e.tsv", tmp_path / "n.tsv"
        generate_synthetic(500, 3000, "uniform", seed=2, edge_path=e,
                           leaning_path=n, edge_model="hubs")
        g = load_graph(e, n)
        assert int(g.out_degree.max()) > 30  # uniform would sit near 6

    def test_infeasible_edge_count_rejected(self, tmp_path):
        with pytest.raises(Exception):
            generate_synthetic(3, 7, "uniform", seed=1,
                               edge_path=tmp_path / "e", leaning_path=tmp_path / "n")


class TestConfig:
    def test_file_then_flag_precedence(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.txt", "k=7\nepsilon=0.3\nalgorithm=far\n")
        cfg = build_config(read_config_file(cfg_path), {"k": "9"})
        assert cfg.k == 9 and cfg.epsilon == 0.3 and cfg.algorithm == "far"

    def test_env_var_overrides_output_dir_only(self, tmp_path, monkeypatch):
        cfg_path = write(tmp_path / "cfg.txt", "output_dir=filedir\nk=3\n")
        monkeypatch.setenv(OUTPUT_DIR_ENV, "envdir")
        cfg = build_config(read_config_file(cfg_path), {"output_dir": "flagdir"})
        assert cfg.output_dir == "envdir"
        assert cfg.k == 3

    def test_unknown_key_rejected(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.txt", "nonsense=1\n")
        with pytest.raises(ParseError):
            read_config_file(cfg_path)

    def test_relative_paths_resolve_against_config_dir(self, tmp_path):
        sub = tmp_path / "sub"
        sub.mkdir()
        cfg_path = write(sub / "cfg.txt", "graph=e.tsv\n")
        values = read_config_file(cfg_path)
        assert values["graph"] == str(sub / "e.tsv")

    def test_validation_catches_bad_ranges(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "0\t1\n")
        nodes = write(tmp_path / "n.tsv", "0\t0.0\n1\t0.1\n")
        cfg = build_config({}, {"graph": edges, "node_leanings": nodes,
                                "epsilon": "1.5"})
        with pytest.raises(ConfigError, match="epsilon"):
            cfg.validate()


@pytest.fixture
def instance_dir(tmp_path):
    e, n = tmp_path / "edges.tsv", tmp_path / "nodes.tsv"
    generate_synthetic(25, 90, "polarized", seed=11, edge_path=e, leaning_path=n)
    cfg = write(
        tmp_path / "cfg.txt",
        "graph=edges.tsv\nnode_leanings=nodes.tsv\nitems=4\nprob_mode=exp\n"
        "k=3\nku=1\nepsilon=0.3\nmaster_seed=5\neval_trials=300\n"
        f"output_dir={tmp_path / 'out'}\n",
    )
    return tmp_path, cfg


class TestCli:
    def test_run_writes_all_outputs(self, instance_dir):
        tmp_path, cfg = instance_dir
        assert cli_main(["run", "--config", cfg]) == 0
        out = tmp_path / "out"
        for name in ("report.kv", "summary.tsv", "exposure.tsv",
                     "assignment.tsv", "exposure_profile.png",
                     "assignment_span.png"):
            assert (out / name).exists(), name

    def test_reports_are_reproducible_and_rescorable(self, instance_dir):
        tmp_path, cfg = instance_dir
        assert cli_main(["run", "--config", cfg,
                         "--output-dir", str(tmp_path / "a")]) == 0
        assert cli_main(["run", "--config", cfg,
                         "--output-dir", str(tmp_path / "b")]) == 0
        ra = (tmp_path / "a" / "report.kv").read_bytes()
        rb = (tmp_path / "b" / "report.kv").read_bytes()
        assert ra == rb
        assert cli_main(["score", "--config", cfg,
                         "--assignment", str(tmp_path / "a" / "assignment.tsv"),
                         "--output-dir", str(tmp_path / "c")]) == 0
        score_line = next(
            line for line in (tmp_path / "c" / "report.kv").read_text().splitlines()
            if line.startswith("score_estimate\t"))
        assert score_line in ra.decode()

    def test_sample_dump_and_load(self, instance_dir, tmp_path):
        _, cfg = instance_dir
        out = tmp_path / "s.rcs"
        assert cli_main(["sample", "--config", cfg, "--count", "200",
                         "--out", str(out)]) == 0
        from coexpose import RcSample
        assert RcSample.load(out).size == 200

    def test_figures_can_be_disabled(self, instance_dir, tmp_path):
        _, cfg = instance_dir
        dest = tmp_path / "nofig"
        assert cli_main(["run", "--config", cfg, "--figures", "false",
                         "--output-dir", str(dest)]) == 0
        assert (dest / "report.kv").exists()
        assert not (dest / "exposure_profile.png").exists()

    def test_parse_error_exit_code(self, tmp_path):
        edges = write(tmp_path / "e.tsv", "0\t1\t9\n")
        nodes = write(tmp_path / "n.tsv", "0\t0.0\n1\t0.1\n")
        code = cli_main(["run", "--graph", edges, "--node-leanings", nodes])
        assert code == 2

    def test_config_error_exit_code(self, instance_dir):
        _, cfg = instance_dir
        assert cli_main(["run", "--config", cfg, "--algorithm", "nope"]) == 3

    def test_resource_error_exit_code(self, instance_dir):
        _, cfg = instance_dir
        assert cli_main(["run", "--config", cfg, "--algorithm", "exact-greedy"]) == 4

    def test_exact_greedy_runs_on_enumerable_instance(self, tmp_path):
        e = write(tmp_path / "e.tsv", "0\t1\n1\t2\n")
        n = write(tmp_path / "n.tsv", "0\t-0.7\n1\t0.0\n2\t0.7\n")
        dest = tmp_path / "eg"
        code = cli_main([
            "run", "--graph", e, "--node-leanings", n, "--items", "3",
            "--algorithm", "exact-greedy", "--k", "2", "--eval-trials", "400",
            "--output-dir", str(dest), "--figures", "false",
        ])
        assert code == 0
        assert b"algorithm\texact-greedy" in (dest / "report.kv").read_bytes()

    def test_baseline_algorithms_run(self, instance_dir, tmp_path):
        _, cfg = instance_dir
        for algo in ("close", "far", "weight"):
            dest = tmp_path / algo
            assert cli_main(["run", "--config", cfg, "--algorithm", algo,
                             "--output-dir", str(dest), "--figures", "false"]) == 0

    def test_weighted_cascade_mode_runs(self, instance_dir, tmp_path):
        _, cfg = instance_dir
        dest = tmp_path / "wc"
        assert cli_main(["run", "--config", cfg, "--prob-mode", "wc",
                         "--output-dir", str(dest), "--figures", "false"]) == 0
        assert b"prob_mode\twc" in (dest / "report.kv").read_bytes()

    def test_ku_overrides_respected(self, instance_dir, tmp_path):
        tmp_dir, cfg = instance_dir
        overrides = write(tmp_dir / "ku.tsv", "0\t3\n")
        from coexpose.dataio import load_instance
        cfg_obj = build_config(read_config_file(cfg), {"ku_overrides": overrides})
        _, _, _, constraints = load_instance(cfg_obj)
        assert constraints.cap(0) == 3 and constraints.cap(1) == 1

    def test_mc_greedy_runs_on_tiny_instance(self, tmp_path):
        e = write(tmp_path / "e.tsv", "0\t1\n")
        n = write(tmp_path / "n.tsv", "0\t-0.5\n1\t0.5\n")
        code = cli_main([
            "run", "--graph", e, "--node-leanings", n, "--items", "2",
            "--algorithm", "mc-greedy", "--k", "2", "--oracle-trials", "200",
            "--eval-trials", "200", "--output-dir", str(tmp_path / "mc"),
            "--figures", "false",
        ])
        assert code == 0


class TestRunExperiment:
    def test_report_object_fields(self, instance_dir):
        tmp_path, cfg = instance_dir
        cfg_obj = build_config(read_config_file(cfg), {"algorithm": "close"})
        report = run_experiment(cfg_obj, write=False)
        assert report.algorithm == "close"
        assert report.score >= 0.0
        assert len(report.assignment) == 3
        assert report.per_node_mean.shape == (25,)
        assert abs(report.per_node_mean.sum() - report.score) < 1e-9
        assert report.stats is not None

    def test_eval_seed_disjoint_from_master(self, instance_dir):
        _, cfg = instance_dir
        cfg_obj = build_config(read_config_file(cfg))
        report = run_experiment(cfg_obj, write=False)
        assert report.eval_seed != cfg_obj.master_seed
