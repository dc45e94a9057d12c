import { describe, expect, it } from "vitest";

import {
  bumpMaskVersion, initialState, interpReadiness, setAxis, setSlice,
  sliceCount, stateFromHash, stateToHash, toggleBookmark,
} from "../src/state.js";

function makeState() {
  return initialState("demo", [24, 24, 20], [1, 1, 1.5], { lo: 0, hi: 1 }, 0);
}

describe("view state", () => {
  it("starts on the middle transverse slice", () => {
    const s = makeState();
    expect(s.axis).toBe("transverse");
    expect(s.sliceIndex).toBe(10);
    expect(sliceCount(s)).toBe(20);
  });

  it("clamps slice changes to the volume extent", () => {
    const s = makeState();
    expect(setSlice(s, -5).sliceIndex).toBe(0);
    expect(setSlice(s, 99).sliceIndex).toBe(19);
  });

  it("switching axis re-clamps and clears bookmarks", () => {
    let s = setSlice(makeState(), 19);
    s = toggleBookmark(s, 3);
    s = setAxis(s, "sagittal");
    expect(s.sliceIndex).toBe(19); // 24 slices along x
    expect(s.bookmarks).toEqual([]);
    expect(sliceCount(s)).toBe(24);
  });

  it("mask version is monotone non-decreasing", () => {
    let s = makeState();
    s = bumpMaskVersion(s, 4);
    expect(s.maskVersion).toBe(4);
    s = bumpMaskVersion(s, 2); // stale response arrives late
    expect(s.maskVersion).toBe(4);
    s = bumpMaskVersion(s, 7);
    expect(s.maskVersion).toBe(7);
  });
});

describe("interpolation readiness", () => {
  it("is disabled with fewer than two bookmarks, with a reason", () => {
    let s = makeState();
    expect(interpReadiness(s).enabled).toBe(false);
    expect(interpReadiness(s).reason).toMatch(/2 more/);
    s = toggleBookmark(s, 4);
    expect(interpReadiness(s).enabled).toBe(false);
    expect(interpReadiness(s).reason).toMatch(/1 more/);
  });

  it("enables at two bookmarks and reports sorted keys", () => {
    let s = makeState();
    s = toggleBookmark(s, 12);
    s = toggleBookmark(s, 4);
    const ready = interpReadiness(s);
    expect(ready.enabled).toBe(true);
    expect(ready.reason).toBeNull();
    expect(ready.keys).toEqual([4, 12]);
  });

  it("unbookmarking drops back below the threshold", () => {
    let s = makeState();
    s = toggleBookmark(s, 4);
    s = toggleBookmark(s, 12);
    s = toggleBookmark(s, 4); // toggle off
    expect(interpReadiness(s).enabled).toBe(false);
  });
});

describe("URL deep-linking", () => {
  it("round-trips the linkable state", () => {
    const link = {
      projectId: "demo",
      axis: "coronal" as const,
      sliceIndex: 7,
      window: { lo: 0.25, hi: 0.75 },
    };
    const back = stateFromHash(stateToHash(link));
    expect(back).toEqual(link);
  });

  it("rejects garbage hashes", () => {
    expect(stateFromHash("")).toBeNull();
    expect(stateFromHash("#axis=bogus&project=x")).toBeNull();
    expect(stateFromHash("#project=x&axis=transverse&slice=NaN")).toBeNull();
  });
});
