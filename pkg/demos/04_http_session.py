"""The HTTP loop a viewer runs: open a volume, fetch a slice image, segment
around a click, refine with a border click, export the mask.

Starts the bundled server on a local port, talks to it with plain HTTP, and
shuts it down at the end.
"""

import json
import tempfile
import threading
import time
import urllib.request

import numpy as np
import uvicorn

from polarcut import PhantomSpec, generate_phantom, save_mask, save_volume
from polarcut.api import create_app

BASE = "http://127.0.0.1:8731"


def post_json(url, body):
    req = urllib.request.Request(url, data=json.dumps(body).encode(),
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


def get(url):
    with urllib.request.urlopen(url) as resp:
        return resp.read()


work = tempfile.mkdtemp()
spec = PhantomSpec(center_mm=(32.5, 32.5, 32.5), radius_mm=10.0, noise_sigma=10.0, rng_seed=4)
vol, truth = generate_phantom(spec)
save_volume(vol, work + "/case.vol")
save_mask(truth, work + "/case.mask")

server = uvicorn.Server(uvicorn.Config(create_app(), host="127.0.0.1", port=8731,
                                       log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.02)

try:
    meta = post_json(BASE + "/session",
                     {"path": work + "/case.vol", "reference": work + "/case.mask"})
    sid = meta["session_id"]
    print("opened session %s: dims %s, intensities %.0f..%.0f"
          % (sid[:8], meta["dims"], *meta["intensity_range"]))

    png = get(BASE + "/session/%s/slice/32?lo=0&hi=100" % sid)
    print("mid slice: %d bytes of PNG" % len(png))

    result = post_json(BASE + "/session/%s/segment" % sid,
                       {"seed": [32.5, 32.5, 32.5], "params": {"level": 2, "samples": 60}})
    stats = result["stats"]
    print("one click: DSC %.4f, %d contour slices, %.0f ms"
          % (stats["dsc"], len(result["contours"]), stats["timings_s"]["total"] * 1e3))

    # a refinement click on the border, 10 mm out along +x
    refined = post_json(BASE + "/session/%s/segment" % sid,
                        {"seed": [32.5, 32.5, 32.5], "extra_seeds": [[42.5, 32.5, 32.5]],
                         "params": {"level": 2, "samples": 60}})
    print("refined:   DSC %.4f, pinned rays %s"
          % (refined["stats"]["dsc"], list(refined["stats"]["pinned_rays"])))

    mask_zip = get(BASE + "/session/%s/export/mask" % sid)
    obj_text = get(BASE + "/session/%s/export/mesh" % sid)
    print("exports: mask zip %d bytes, mesh OBJ %d lines"
          % (len(mask_zip), obj_text.count(b"\n")))
finally:
    server.should_exit = True
    thread.join()
