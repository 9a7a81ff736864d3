import json

import pandas as pd
import pytest
from click.testing import CliRunner

import bohmlab.cli as cli_module
from bohmlab.cli import cli, parse_params
from bohmlab.errors import ConfigError, DomainError

DOMAIN = ("--domain=-25.132741228718345,25.132741228718345,512", "--span", "0,0.1", "--snapshots", "3")


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def invoke(runner, tmp_path):
    def run(*args):
        return runner.invoke(cli, [*args, "--out", str(tmp_path)] if args[0] != "list" else list(args))

    return run


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "0.1.0" in result.output


class TestList:
    def test_json_catalogue(self, invoke):
        result = invoke("list", "--json")
        assert result.exit_code == 0
        catalogue = json.loads(result.stdout)
        assert len(catalogue) == 13
        assert catalogue[0]["id"] == "plane_wave"
        assert catalogue[0]["default_grid"]["nx"] == 512
        assert catalogue[0]["window"] == [-0.25, 0.25, 0.5, 0.7]

    def test_section_filter(self, invoke):
        result = invoke("list", "--section", "VII")
        assert result.exit_code == 0
        assert "4 families" in result.output
        assert "airy_forced" in result.output
        assert "oscillator_vvm" not in result.output
        assert "x[-0.5,0] t[0.5,0.7]" in result.output


class TestGenerate:
    def test_family_csv(self, invoke, tmp_path):
        result = invoke("generate", "--family", "airy_packet", "-p", "beta=2", "--grid", "-1,1,16,0,0.5,8")
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "airy_packet.csv")
        assert len(frame) == 16 * 8
        assert {"A", "S", "psi_re", "psi_im", "V", "V_B"} <= set(frame.columns)
        header = json.loads((tmp_path / "airy_packet.json").read_text())
        assert header["grid"]["nt"] == 8

    def test_custom_generating_function_json(self, invoke, tmp_path):
        result = invoke("generate", "--f-expr", "exp(x)", "--grid", "-1,1,16,0,1,8", "--format", "json")
        assert result.exit_code == 0, result.output
        document = json.loads((tmp_path / "custom.json").read_text())
        assert len(document["fields"]["A"]) == 8

    def test_config_file(self, invoke, tmp_path):
        path = tmp_path / "family.json"
        path.write_text(json.dumps({"family": "power_cosine", "params": {"n": 2}}))
        result = invoke("generate", "--config", str(path), "--grid", "0.5,1,16,0,0.5,8")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "power_cosine.csv").exists()


class TestUsageErrors:
    @pytest.mark.parametrize(
        "args",
        [
            ("generate",),
            ("generate", "--family", "plane_wave", "--f-expr", "x"),
            ("generate", "--family", "no_such_family"),
            ("generate", "--family", "plane_wave", "-p", "k"),
            ("generate", "--family", "plane_wave", "-p", "bogus=1"),
            ("generate", "--mu-expr", "t", "--family", "plane_wave"),
            ("generate", "--f-expr", "foo(x)"),
            ("generate", "--f-expr", "x^3 +"),
            ("generate", "--family", "plane_wave", "--grid", "0,1,4,0,1,8"),
            ("verify", "-p", "k=1"),
            ("propagate", "--f-expr", "x^3/3 + x"),
            ("propagate", "--family", "plane_wave", "--grid", "0,1,16,0,1,8"),
            ("propagate", "--family", "plane_wave", "--domain", "0,1"),
            ("propagate", "--family", "plane_wave", "--span", "0,a"),
            ("propagate", "--family", "plane_wave", "--snapshots", "1"),
            ("sweep", "--family", "airy_packet", "--param", "beta", "--range", "a:b"),
        ],
    )
    def test_exit_two(self, invoke, args):
        result = invoke(*args)
        assert result.exit_code == 2, result.output

    def test_domain_error_exit_three(self, invoke, monkeypatch):
        def broken(config, consts):
            raise DomainError("sqrt of negative value")

        monkeypatch.setattr(cli_module, "build", broken)
        result = invoke("generate", "--family", "plane_wave")
        assert result.exit_code == 3
        assert "sqrt of negative" in result.output


class TestVerify:
    def test_single_family_passes(self, invoke, tmp_path):
        result = invoke("verify", "--family", "plane_wave")
        assert result.exit_code == 0, result.output
        assert "1/1 passed" in result.output
        report = json.loads((tmp_path / "verify_plane_wave.json").read_text())
        assert report[0]["passed"] is True

    def test_json_output(self, invoke):
        result = invoke("verify", "--family", "exp_cubic", "-p", "preset=ac", "--json")
        assert result.exit_code == 0, result.output
        document = json.loads(result.stdout)
        assert document[0]["family"] == "exp_cubic"
        assert {c["name"] for c in document[0]["checks"]} >= {"schrodinger", "qhje"}

    def test_failure_exit_one(self, invoke):
        result = invoke("verify", "--family", "airy_packet", "--tol", "1e-15")
        assert result.exit_code == 1
        assert "airy_packet.schrodinger" in result.output


class TestPropagate:
    def test_gaussian_packet(self, invoke, tmp_path):
        result = invoke("propagate", "--family", "scaling_packet", *DOMAIN)
        assert result.exit_code == 0, result.output
        errors = pd.read_csv(tmp_path / "propagate_scaling_packet_errors.csv")
        assert len(errors) == 3
        assert errors["l2"].max() <= 1e-4
        snapshots = pd.read_csv(tmp_path / "propagate_scaling_packet.csv")
        assert len(snapshots) == 3 * 512
        report = json.loads((tmp_path / "propagate_scaling_packet_report.json").read_text())
        assert report[0]["passed"] is True

    def test_snapshot_count_is_independent_of_span(self, invoke, tmp_path):
        result = invoke("propagate", "--family", "scaling_packet", *DOMAIN[:3], "--snapshots", "5")
        assert result.exit_code == 0, result.output
        errors = pd.read_csv(tmp_path / "propagate_scaling_packet_errors.csv")
        assert errors["t"].tolist() == pytest.approx([0.0, 0.025, 0.05, 0.075, 0.1])

    def test_threshold_exit_one(self, invoke):
        result = invoke("propagate", "--family", "scaling_packet", *DOMAIN, "--max-error", "1e-30")
        assert result.exit_code == 1


class TestSweep:
    def test_airy_acceleration(self, invoke, tmp_path):
        result = invoke("sweep", "--family", "airy_packet", "--param", "beta", "--range", "0.5,1")
        assert result.exit_code == 0, result.output
        table = pd.read_csv(tmp_path / "sweep_airy_packet_beta.csv")
        assert table["beta"].tolist() == [0.5, 1.0]
        assert table["acceleration"].tolist() == pytest.approx([0.0625, 0.5])

    def test_failing_point_exit_one(self, invoke, monkeypatch):
        import bohmlab.suite as suite

        real = suite.measure

        def flaky(config, consts):
            if config.beta == 1.0:
                raise DomainError("trajectory left the grid")
            return real(config, consts)

        monkeypatch.setattr(suite, "measure", flaky)
        result = invoke("sweep", "--family", "airy_packet", "--param", "beta", "--range", "0.5,1", "--format", "json")
        assert result.exit_code == 1
        assert "beta=1.0" in result.output


@pytest.mark.parametrize(
    ("pairs", "expected"),
    [
        (["k=1"], {"k": 1}),
        (["lam=0.5", "kind=gaussian"], {"lam": 0.5, "kind": "gaussian"}),
        ([" zeta = t^2/2 "], {"zeta": "t^2/2"}),
    ],
)
def test_parse_params(pairs, expected):
    assert parse_params(pairs) == expected


def test_parse_params_rejects():
    with pytest.raises(ConfigError):
        parse_params(["=1"])
