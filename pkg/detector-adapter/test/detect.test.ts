import { describe, expect, it } from "vitest";

import {
  DEFAULT_OPTIONS,
  backgroundLevel,
  classifyShape,
  detectFrame,
  foregroundMask,
} from "../src/detect";
import { luminance } from "../src/png";
import { blankRaster, fillRect } from "./helpers";

describe("backgroundLevel", () => {
  it("picks the dominant luma", () => {
    const raster = blankRaster(16, 16);
    fillRect(raster, 0, 0, 4, 4, [250, 250, 250]);
    expect(backgroundLevel(luminance(raster))).toBe(40);
  });
});

describe("foregroundMask", () => {
  it("marks only pixels far from the background", () => {
    const raster = blankRaster(8, 8);
    fillRect(raster, 2, 2, 3, 3, [220, 220, 220]);
    const mask = foregroundMask(raster, 24);
    let on = 0;
    for (const v of mask.data) on += v;
    expect(on).toBe(9);
    expect(mask.data[2 * 8 + 2]).toBe(1);
    expect(mask.data[0]).toBe(0);
  });

  it("ignores wiggle inside the tolerance", () => {
    const raster = blankRaster(8, 8);
    fillRect(raster, 1, 1, 2, 2, [55, 55, 55]); // |55 - 40| < 24
    const mask = foregroundMask(raster, 24);
    expect(mask.data.every((v) => v === 0)).toBe(true);
  });
});

describe("classifyShape", () => {
  it("reads tall-narrow as person", () => {
    expect(classifyShape(5, 14)).toBe("person");
  });

  it("reads very wide as bus", () => {
    expect(classifyShape(30, 10)).toBe("bus");
  });

  it("defaults to car", () => {
    expect(classifyShape(16, 12)).toBe("car");
  });
});

describe("detectFrame", () => {
  it("finds nothing on a uniform frame", () => {
    expect(detectFrame(blankRaster())).toEqual([]);
  });

  it("boxes a solid rectangle exactly, confidence 1", () => {
    const raster = blankRaster();
    fillRect(raster, 10, 20, 16, 12);
    const records = detectFrame(raster);
    expect(records).toHaveLength(1);
    const rec = records[0]!;
    expect(rec.bbox).toEqual([10, 20, 26, 32]);
    expect(rec.confidence).toBe(1);
    expect(rec.class).toBe("car");
    expect(rec.contour).not.toBeNull();
    expect(rec.contour!.length).toBeGreaterThanOrEqual(4);
    expect(rec.contour!.length).toBeLessThanOrEqual(200);
  });

  it("classifies a tall blob as person", () => {
    const raster = blankRaster();
    fillRect(raster, 45, 8, 5, 14);
    expect(detectFrame(raster)[0]!.class).toBe("person");
  });

  it("drops blobs below the confidence threshold", () => {
    const raster = blankRaster(32, 32);
    // L-shape: 7 of 16 bbox pixels filled, solidity 0.4375
    fillRect(raster, 4, 4, 1, 4);
    fillRect(raster, 5, 7, 3, 1);
    const strict = detectFrame(raster, { ...DEFAULT_OPTIONS, confidenceThreshold: 0.5, minArea: 4, minSide: 3 });
    expect(strict).toEqual([]);
    const lax = detectFrame(raster, { ...DEFAULT_OPTIONS, confidenceThreshold: 0.3, minArea: 4, minSide: 3 });
    expect(lax).toHaveLength(1);
    expect(lax[0]!.confidence).toBeCloseTo(0.4375, 12);
  });

  it("drops thin stripes via the minimum side", () => {
    const raster = blankRaster();
    fillRect(raster, 2, 40, 20, 1);
    expect(detectFrame(raster)).toEqual([]);
  });

  it("drops specks via the minimum area", () => {
    const raster = blankRaster();
    fillRect(raster, 5, 5, 3, 3); // 9 px < minArea 12
    expect(detectFrame(raster)).toEqual([]);
  });

  it("respects the class allowlist", () => {
    const raster = blankRaster();
    fillRect(raster, 10, 20, 16, 12); // classifies as car
    const noCars = detectFrame(raster, { ...DEFAULT_OPTIONS, allowedClasses: ["person", "bus"] });
    expect(noCars).toEqual([]);
  });

  it("reports two separated objects in raster order", () => {
    const raster = blankRaster();
    fillRect(raster, 45, 8, 5, 14);
    fillRect(raster, 10, 20, 16, 12);
    const classes = detectFrame(raster).map((r) => r.class);
    expect(classes).toEqual(["person", "car"]);
  });

  it("keeps every contour vertex inside the image bounds", () => {
    const raster = blankRaster();
    fillRect(raster, 0, 0, 10, 8); // touches the top-left corner
    const rec = detectFrame(raster)[0]!;
    for (const [x, y] of rec.contour!) {
      expect(x).toBeGreaterThanOrEqual(0);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(raster.width);
      expect(y).toBeLessThanOrEqual(raster.height);
    }
  });

  it("is deterministic", () => {
    const raster = blankRaster();
    fillRect(raster, 10, 20, 16, 12);
    fillRect(raster, 45, 8, 5, 14);
    expect(detectFrame(raster)).toEqual(detectFrame(raster));
  });
});
