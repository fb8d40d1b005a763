import json

import numpy as np
import pytest

from srdetect import __version__
from srdetect.core.config import ExperimentConfig
from srdetect.core.output import (
    format_value,
    read_csv,
    render_csv,
    render_json,
    write_output,
)


@pytest.fixture
def config():
    return ExperimentConfig.from_dict({"simulation": {"seed": 3}})


class TestFormatValue:
    def test_twelve_significant_digits(self):
        assert format_value(1.0 / 3.0) == "0.333333333333"
        assert format_value(2.0) == "2"

    def test_numpy_scalars(self):
        assert format_value(np.float64(0.5)) == "0.5"
        assert format_value(np.int64(7)) == "7"

    def test_special_values(self):
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value("srp") == "srp"


class TestRenderCSV:
    def test_header_lines(self, config):
        text = render_csv(["a", "b"], [[1, 2.5]], config, "oc", extra_header=["lambda: 0.5"])
        lines = text.splitlines()
        assert lines[0] == f"# srdetect {__version__}"
        assert lines[1] == "# command: oc"
        assert lines[2] == f"# config: {config.dumps()}"
        assert lines[3] == "# lambda: 0.5"
        assert lines[4:] == ["a,b", "1,2.5"]

    def test_row_width_checked(self, config):
        with pytest.raises(ValueError, match="expected 2"):
            render_csv(["a", "b"], [[1]], config, "oc")

    def test_deterministic(self, config):
        rows = [[x, x * x] for x in np.linspace(0, 1, 5)]
        assert render_csv(["x", "y"], rows, config, "oc") == render_csv(["x", "y"], rows, config, "oc")


class TestRenderJSON:
    def test_meta_block(self, config):
        doc = json.loads(render_json({"mean": 1.5}, config, "simulate"))
        assert doc["mean"] == 1.5
        assert doc["meta"] == {"version": __version__, "command": "simulate",
                               "config": config.to_dict()}


class TestWriters:
    def test_csv_round_trip_with_sidecar(self, tmp_path, config):
        path = tmp_path / "sub" / "out.csv"
        text = render_csv(["r", "phi"], [[0.0, 1.75], [0.5, 1.5]], config, "oc")
        write_output(str(path), text, config, "oc")
        header, rows = read_csv(str(path))
        assert header[1] == "command: oc"
        assert rows == [{"r": "0", "phi": "1.75"}, {"r": "0.5", "phi": "1.5"}]
        sidecar = json.loads((tmp_path / "sub" / "out.csv.config.json").read_text())
        assert sidecar["config"] == config.to_dict()

    def test_json_writer(self, tmp_path, config):
        path = tmp_path / "cal.json"
        write_output(str(path), render_json({"threshold": 1.66}, config, "calibrate"),
                     config, "calibrate")
        assert json.loads(path.read_text())["threshold"] == 1.66
        assert (tmp_path / "cal.json.config.json").exists()
