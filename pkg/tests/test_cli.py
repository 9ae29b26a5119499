"""End-to-end command-line behavior, run in process through main()."""

import hashlib
import json
import math

import numpy as np
import pytest

from acmescan import GenePair, fit_acme, load_matrices, scan_to_tsv, write_bundle
from acmescan.cli import main
from conftest import build_bundle


@pytest.fixture
def bundle_paths(tmp_path):
    rng = np.random.default_rng(601)
    bundle = build_bundle(rng, n_genes=4, n_snps=30, n_samples=80)
    return write_bundle(bundle, str(tmp_path))


def _scan_args(paths, out, extra=()):
    return [
        "scan",
        "--genotype", paths["genotype"],
        "--expression", paths["expression"],
        "--covariates", paths["covariates"],
        "--snp-loc", paths["snp_loc"],
        "--gene-loc", paths["gene_loc"],
        "--out", str(out),
        *extra,
    ]


def _fit_args(paths, gene, snp, extra=()):
    return [
        "fit",
        "--genotype", paths["genotype"],
        "--expression", paths["expression"],
        "--covariates", paths["covariates"],
        "--snp-loc", paths["snp_loc"],
        "--gene-loc", paths["gene_loc"],
        "--gene", gene,
        "--snp", snp,
        *extra,
    ]


class TestScanCommand:
    def test_matches_library_output(self, bundle_paths, tmp_path):
        cli_out = tmp_path / "cli_scan.tsv"
        assert main(_scan_args(bundle_paths, cli_out)) == 0

        lib_out = tmp_path / "lib_scan.tsv"
        bundle = load_matrices(
            bundle_paths["genotype"],
            bundle_paths["expression"],
            bundle_paths["covariates"],
            bundle_paths["snp_loc"],
            bundle_paths["gene_loc"],
        )
        scan_to_tsv(
            bundle, lib_out, models=("acme", "ll", "qn"), min_maf=0.05,
            window=1_000_000, workers=1,
        )
        assert cli_out.read_bytes() == lib_out.read_bytes()

    def test_manifest(self, bundle_paths, tmp_path):
        out = tmp_path / "scan.tsv"
        argv = _scan_args(bundle_paths, out, extra=["--workers", "2", "--seed", "7"])
        assert main(argv) == 0
        manifest = json.loads((tmp_path / "scan.tsv.manifest.json").read_text())
        assert set(manifest) == {
            "command", "inputs", "seed", "version", "wall_time_s", "workers",
        }
        assert manifest["command"] == ["acmescan", *argv]
        assert manifest["seed"] == 7
        assert manifest["workers"] == 2
        assert manifest["version"] == "0.1.0"
        assert manifest["wall_time_s"] >= 0.0
        assert set(manifest["inputs"]) == {str(p) for p in bundle_paths.values()}
        for path, digest in manifest["inputs"].items():
            with open(path, "rb") as fh:
                assert digest == hashlib.sha256(fh.read()).hexdigest()

    def test_zero_window(self, bundle_paths, tmp_path):
        wide = tmp_path / "wide.tsv"
        narrow = tmp_path / "narrow.tsv"
        assert main(_scan_args(bundle_paths, wide, extra=["--min-maf", "0"])) == 0
        assert main(
            _scan_args(bundle_paths, narrow, extra=["--min-maf", "0", "--window", "0"])
        ) == 0
        n_wide = len(wide.read_text().splitlines())
        n_narrow = len(narrow.read_text().splitlines())
        assert 1 <= n_narrow < n_wide

    def test_missing_required_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["scan"])
        assert exc_info.value.code == 2
        assert "required" in capsys.readouterr().err

    def test_bad_genotype_entry_exits_2(self, bundle_paths, tmp_path, capsys):
        lines = open(bundle_paths["genotype"]).read().splitlines()
        parts = lines[1].split("\t")
        parts[1] = "9"
        lines[1] = "\t".join(parts)
        open(bundle_paths["genotype"], "w").write("\n".join(lines) + "\n")
        code = main(_scan_args(bundle_paths, tmp_path / "x.tsv"))
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_file_exits_3(self, bundle_paths, tmp_path, capsys):
        bad = dict(bundle_paths)
        bad["genotype"] = str(tmp_path / "no_such_file.tsv")
        code = main(_scan_args(bad, tmp_path / "x.tsv"))
        assert code == 3
        assert "i/o error:" in capsys.readouterr().err


class TestSimulateCommands:
    def test_null_is_deterministic(self, tmp_path):
        args = [
            "simulate", "null", "--pairs", "30", "--n", "60", "--p", "2",
            "--seed", "5",
        ]
        out1, out2 = tmp_path / "null1.tsv", tmp_path / "null2.tsv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

        body = out1.read_text().splitlines()
        assert body[0] == "pair\tp_acme\tp_ll"
        assert len(body) == 31

        summary = (tmp_path / "null1.tsv.summary.tsv").read_text().splitlines()
        assert summary[0] == "model\tinflation_lambda"
        models = [line.split("\t")[0] for line in summary[1:]]
        assert models == ["acme", "ll"]
        for line in summary[1:]:
            assert math.isfinite(float(line.split("\t")[1]))

    def test_power_row_count(self, tmp_path):
        out = tmp_path / "power.tsv"
        code = main(
            [
                "simulate", "power", "--grid", "0.1,0.5", "--replicates", "4",
                "--models", "acme,ll", "--n", "60", "--p", "2", "--out", str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].split("\t")[0] == "eta"
        assert len(lines) == 1 + 2 * 2

    def test_tail_null_proposal(self, tmp_path):
        out = tmp_path / "tail.tsv"
        code = main(
            [
                "simulate", "tail", "--alpha", "0.05", "--draws", "60",
                "--proposal", "null", "--n", "60", "--p", "2", "--out", str(out),
            ]
        )
        assert code == 0
        header, row = out.read_text().splitlines()
        assert header == "alpha\testimate\tmc_se\tn_effective\tflagged"
        cells = row.split("\t")
        assert float(cells[0]) == 0.05
        assert cells[4] in ("true", "false")

    def test_bad_alpha_exits_2(self, tmp_path, capsys):
        code = main(
            [
                "simulate", "tail", "--alpha", "0.9", "--draws", "10",
                "--n", "60", "--p", "2", "--out", str(tmp_path / "t.tsv"),
            ]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestFitCommand:
    def _pick_cis_pair(self, paths):
        bundle = load_matrices(
            paths["genotype"], paths["expression"], paths["covariates"],
            paths["snp_loc"], paths["gene_loc"],
        )
        from acmescan import enumerate_cis_pairs

        gi, si = next(enumerate_cis_pairs(bundle.expression, bundle.genotype, 1_000_000))
        return bundle, bundle.expression.gene_ids[gi], bundle.genotype.snp_ids[si]

    def test_report_matches_library(self, bundle_paths, capsys):
        bundle, gene, snp = self._pick_cis_pair(bundle_paths)
        assert main(_fit_args(bundle_paths, gene, snp)) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == "model\tfield\tvalue"
        values = {}
        for line in lines[1:]:
            model, field, value = line.split("\t")
            values[(model, field)] = value

        gi = bundle.expression.gene_ids.index(gene)
        si = bundle.genotype.snp_ids.index(snp)
        pair = GenePair(
            y=bundle.expression.data[gi], s=bundle.genotype.data[si], Z=bundle.covariates
        )
        fit = fit_acme(pair)
        assert float(values[("acme", "eta")]) == pytest.approx(fit.eta, rel=1e-8, abs=1e-9)
        assert float(values[("acme", "beta0")]) == pytest.approx(fit.beta0, rel=1e-8)
        assert float(values[("pair", "maf")]) == pytest.approx(
            min(pair.s.mean() / 2.0, 1.0 - pair.s.mean() / 2.0), rel=1e-8
        )
        assert values[("acme", "converged")] in ("true", "false")
        assert values[("log_ancova", "classes_observed")] == "0,1,2"

    def test_out_file_and_manifest(self, bundle_paths, tmp_path, capsys):
        bundle, gene, snp = self._pick_cis_pair(bundle_paths)
        out = tmp_path / "fit.tsv"
        assert main(_fit_args(bundle_paths, gene, snp, extra=["--out", str(out)])) == 0
        stdout_text = capsys.readouterr().out
        assert out.read_text() == stdout_text
        assert (tmp_path / "fit.tsv.manifest.json").exists()

    def test_unknown_gene_exits_2(self, bundle_paths, capsys):
        code = main(_fit_args(bundle_paths, "NOPE", "rs0001"))
        assert code == 2
        assert "unknown gene" in capsys.readouterr().err

    def test_monomorphic_snp_exits_2(self, bundle_paths, capsys):
        bundle, gene, snp = self._pick_cis_pair(bundle_paths)
        # rewrite that SNP's genotype row as all ones
        lines = open(bundle_paths["genotype"]).read().splitlines()
        n = len(lines[0].split("\t")) - 1
        for i, line in enumerate(lines):
            if line.startswith(snp + "\t"):
                lines[i] = "\t".join([snp] + ["1"] * n)
        open(bundle_paths["genotype"], "w").write("\n".join(lines) + "\n")
        code = main(_fit_args(bundle_paths, gene, snp))
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestBenchCommand:
    def test_stdout_table(self, capsys):
        code = main(["bench", "--pairs", "5", "--n", "60", "--p", "2"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "method\tmean_ms\tsd_ms\tn_pairs"
        methods = [line.split("\t")[0] for line in lines[1:]]
        assert methods == ["ols", "bfgs", "acme"]
        for line in lines[1:]:
            assert float(line.split("\t")[1]) > 0

    def test_out_file(self, tmp_path):
        out = tmp_path / "bench.tsv"
        code = main(["bench", "--pairs", "3", "--n", "60", "--p", "2", "--out", str(out)])
        assert code == 0
        assert out.exists()
        assert (tmp_path / "bench.tsv.manifest.json").exists()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert "acmescan 0.1.0" in capsys.readouterr().out
