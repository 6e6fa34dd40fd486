import numpy as np
import pytest

from mscodec.errors import CapabilityError, FormatError
from mscodec.external import (
    AdapterConfig,
    external_encoder_run,
    load_adapter_config,
    read_plane_sequence,
    write_plane_sequence,
)


def _planes(count=3, h=8, w=8, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 1024, (count, h, w)).astype(np.int64)


def test_no_adapter_is_capability_error(tmp_path):
    with pytest.raises(CapabilityError):
        external_encoder_run(_planes(), None, tmp_path)


def test_missing_executable_is_capability_error(tmp_path):
    cfg = AdapterConfig("/does/not/exist", "template.cfg")
    with pytest.raises(CapabilityError):
        external_encoder_run(_planes(), cfg, tmp_path)


def test_stub_roundtrip(stub_encoder, tmp_path):
    script, template = stub_encoder
    cfg = AdapterConfig(str(script), str(template), threads=2, timeout_seconds=60)
    planes = _planes(4)
    bits, recon = external_encoder_run(planes, cfg, tmp_path / "work")
    assert bits == [1000, 1001, 1002, 1003]  # stub-declared values
    assert np.array_equal(recon, planes)  # identity encoder


def test_odd_dimensions_rejected_before_invocation(tmp_path):
    cfg = AdapterConfig("/does/not/exist", "t.cfg")
    with pytest.raises(ValueError):
        external_encoder_run(_planes(2, 7, 8), cfg, tmp_path)


def test_nonzero_exit_reported(tmp_path):
    script = tmp_path / "fail.py"
    script.write_text("#!/usr/bin/env python3\nimport sys\nsys.exit(3)\n")
    script.chmod(0o755)
    cfg = AdapterConfig(str(script), "t.cfg")
    with pytest.raises(FormatError):
        external_encoder_run(_planes(), cfg, tmp_path / "w")


def test_unparsable_output_reported(tmp_path):
    script = tmp_path / "silent.py"
    script.write_text(
        "#!/usr/bin/env python3\n"
        "import sys, shutil\n"
        "shutil.copyfile(sys.argv[2] + '/input.raw', sys.argv[2] + '/recon.raw')\n"
        "print('no bit counts here')\n"
    )
    script.chmod(0o755)
    cfg = AdapterConfig(str(script), "t.cfg")
    with pytest.raises(FormatError):
        external_encoder_run(_planes(), cfg, tmp_path / "w")


def test_sequence_roundtrip(tmp_path):
    planes = _planes(2, 4, 6)
    write_plane_sequence(planes, tmp_path)
    back = read_plane_sequence(tmp_path / "input.raw", 6, 4, 2)
    assert np.array_equal(back, planes)
    sidecar = (tmp_path / "input.json").read_text()
    assert '"width": 6' in sidecar and '"count": 2' in sidecar


def test_config_file_parsing(tmp_path):
    cfg_file = tmp_path / "adapter.cfg"
    cfg_file.write_text(
        "# comment\nexecutable = /usr/bin/true\ntemplate = t.cfg\n"
        "threads = 4\ntimeout_seconds = 30\n"
    )
    cfg = load_adapter_config(cfg_file)
    assert cfg.executable == "/usr/bin/true"
    assert cfg.threads == 4
    assert cfg.timeout_seconds == 30.0


def test_config_missing_key(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("template = t.cfg\n")
    with pytest.raises(FormatError):
        load_adapter_config(cfg_file)
