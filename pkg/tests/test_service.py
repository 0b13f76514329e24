import json
import urllib.request

import pytest

from lfretarget import model
from lfretarget.disparity import DisparityConfig
from lfretarget.pipeline import PipelineConfig, RenderState, run_pipeline
from lfretarget.service import ViewService
from lfretarget.synthetic import demo_light_field


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    lf = tmp_path_factory.mktemp("lf")
    grid, _ = demo_light_field(v_y=3, v_x=3, height=64, width=64, seed=17)
    model.save_light_field(grid, lf)
    out = tmp_path_factory.mktemp("out")
    run_pipeline(PipelineConfig(input_dir=str(lf), output_dir=str(out),
                                disparity=DisparityConfig(max_d=6, ref_spacing=2),
                                scale=50.0))
    state = RenderState.load(out)
    service = ViewService(state, port=0).start()
    yield f"http://127.0.0.1:{service.port}", state, out
    service.stop()


def get(url):
    with urllib.request.urlopen(url, timeout=10) as r:
        return r.status, dict(r.headers), r.read()


def test_meta(served):
    base = served[0]
    status, headers, body = get(base + "/meta")
    assert status == 200
    assert headers["Content-Type"] == "application/json"
    meta = json.loads(body)
    assert meta["grid"] == {"V_x": 3, "V_y": 3}
    assert len(meta["layout"]["panelDepths"]) == 3
    assert meta["modes"] == ["composite", "falsecolor", "panels"]
    assert meta["calibrated"] is False


def test_view_png(served):
    base = served[0]
    status, headers, body = get(base + "/view?ax=0.1&ay=-0.2")
    assert status == 200
    assert headers["Content-Type"] == "image/png"
    assert body[:8] == b"\x89PNG\r\n\x1a\n"
    assert headers["X-Pose-Clamped"] == "0"


def test_view_clamp_header(served):
    base = served[0]
    _, headers, _ = get(base + "/view?ax=2.0&ay=0.0")
    assert headers["X-Pose-Clamped"] == "1"


def test_view_modes(served):
    base = served[0]
    for mode in ("composite", "falsecolor", "panels"):
        status, _, body = get(base + f"/view?ax=0&ay=0&mode={mode}")
        assert status == 200
        assert body[:8] == b"\x89PNG\r\n\x1a\n"


def test_bad_requests(served):
    base = served[0]
    with pytest.raises(urllib.error.HTTPError) as e:
        get(base + "/view?ax=abc&ay=0")
    assert e.value.code == 400
    with pytest.raises(urllib.error.HTTPError) as e:
        get(base + "/view?ax=0&ay=0&mode=bogus")
    assert e.value.code == 400
    with pytest.raises(urllib.error.HTTPError) as e:
        get(base + "/nope")
    assert e.value.code == 404


def test_service_frame_matches_direct_render(served):
    # the HTTP frame and a direct state render must be byte-identical
    base, state = served[0], served[1]
    _, _, body = get(base + "/view?ax=0.13&ay=-0.27&mode=composite")
    png, _ = state.render_png(0.13, -0.27, "composite")
    assert body == png


def test_service_frame_matches_cli_render(served, tmp_path):
    # the browser UI fetches /view; the same pose and mode rendered through
    # the CLI must produce the identical PNG bytes
    from lfretarget.cli import main as cli_main
    base, art = served[0], served[2]
    for mode in ("composite", "falsecolor"):
        _, _, body = get(base + f"/view?ax=0.21&ay=-0.08&mode={mode}")
        out = tmp_path / f"{mode}.png"
        rc = cli_main(["render-view", "--artifacts", str(art),
                       "--ang-x", "0.21", "--ang-y", "-0.08",
                       "--mode", mode, "--out", str(out)])
        assert rc == 0
        assert out.read_bytes() == body
