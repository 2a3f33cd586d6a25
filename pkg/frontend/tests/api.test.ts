import { describe, expect, it } from "vitest";

import { ApiClient, RequestFailed, SegmentRequest } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function jsonResponse(obj: unknown, status = 200): Response {
  return new Response(JSON.stringify(obj), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function recordingClient(respond: (call: Call) => Response): { client: ApiClient; calls: Call[] } {
  const calls: Call[] = [];
  const client = new ApiClient("http://srv", async (url, init) => {
    const call = { url, init };
    calls.push(call);
    return respond(call);
  });
  return { client, calls };
}

const META = {
  session_id: "abc123",
  dims: [64, 64, 32] as [number, number, number],
  spacing_mm: [1, 1, 2] as [number, number, number],
  intensity_range: [0, 100] as [number, number],
};

describe("openSession", () => {
  it("posts the volume path and parses the metadata", async () => {
    const { client, calls } = recordingClient(() => jsonResponse(META));
    const meta = await client.openSession("/data/case.vol");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://srv/session");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ path: "/data/case.vol" });
    expect(meta.dims).toEqual([64, 64, 32]);
    expect(meta.session_id).toBe("abc123");
  });

  it("includes the reference mask only when given", async () => {
    const { client, calls } = recordingClient(() => jsonResponse(META));
    await client.openSession("/data/case.vol", "/data/case.mask");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      path: "/data/case.vol",
      reference: "/data/case.mask",
    });
  });

  it("maps the error envelope onto RequestFailed", async () => {
    const { client } = recordingClient(() =>
      jsonResponse({ error: { kind: "bad_volume", message: "no such file" } }, 400),
    );
    const err = await client.openSession("/nope").catch((e) => e);
    expect(err).toBeInstanceOf(RequestFailed);
    expect(err.status).toBe(400);
    expect(err.kind).toBe("bad_volume");
    expect(err.message).toBe("no such file");
  });
});

describe("segment", () => {
  const REQ: SegmentRequest = {
    seed: [32, 32, 16],
    extra_seeds: [[40, 32, 16]],
    voxel_coords: true,
    params: { level: 2, samples: 30 },
  };

  it("posts seeds in voxel coordinates to the session endpoint", async () => {
    const reply = { contours: [{ slice: 16, polylines: [[[1, 1], [2, 2], [1, 1]]] }], stats: { dsc: 1 } };
    const { client, calls } = recordingClient(() => jsonResponse(reply));
    const res = await client.segment("abc123", REQ);
    expect(calls[0].url).toBe("http://srv/session/abc123/segment");
    const sent = JSON.parse(String(calls[0].init?.body));
    expect(sent.voxel_coords).toBe(true);
    expect(sent.seed).toEqual([32, 32, 16]);
    expect(sent.extra_seeds).toEqual([[40, 32, 16]]);
    expect(res.contours[0].slice).toBe(16);
  });

  it("surfaces engine errors with their kind", async () => {
    const { client } = recordingClient(() =>
      jsonResponse({ error: { kind: "seed_out_of_bounds", message: "outside" } }, 422),
    );
    const err = await client.segment("abc123", REQ).catch((e) => e);
    expect(err).toBeInstanceOf(RequestFailed);
    expect(err.kind).toBe("seed_out_of_bounds");
  });

  it("keeps a generic kind when the body is not JSON", async () => {
    const { client } = recordingClient(() => new Response("boom", { status: 500 }));
    const err = await client.segment("abc123", REQ).catch((e) => e);
    expect(err.kind).toBe("internal");
    expect(err.status).toBe(500);
  });
});

describe("urls and exports", () => {
  it("builds windowed slice urls", () => {
    const { client } = recordingClient(() => jsonResponse({}));
    expect(client.sliceUrl("abc123", 16, 0, 100)).toBe(
      "http://srv/session/abc123/slice/16?lo=0&hi=100",
    );
  });

  it("fetches export payloads as bytes", async () => {
    const payload = new Uint8Array([80, 75, 3, 4]);
    const { client, calls } = recordingClient(() => new Response(payload, { status: 200 }));
    const buf = await client.exportBytes("abc123", "mask");
    expect(calls[0].url).toBe("http://srv/session/abc123/export/mask");
    expect(new Uint8Array(buf)).toEqual(payload);
  });
});
