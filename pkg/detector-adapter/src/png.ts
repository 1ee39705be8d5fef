import { readFileSync, writeFileSync } from "fs";
import { PNG } from "pngjs";

export interface Raster {
  width: number;
  height: number;
  /** RGBA, row-major */
  pixels: Uint8Array;
}

export function readPng(path: string): Raster {
  const png = PNG.sync.read(readFileSync(path));
  return { width: png.width, height: png.height, pixels: new Uint8Array(png.data) };
}

export function writePng(path: string, raster: Raster): void {
  const png = new PNG({ width: raster.width, height: raster.height });
  Buffer.from(raster.pixels).copy(png.data);
  writeFileSync(path, PNG.sync.write(png));
}

/** Rec. 601 luma, rounded to the nearest integer. */
export function luminance(raster: Raster): Uint8Array {
  const { width, height, pixels } = raster;
  const out = new Uint8Array(width * height);
  for (let i = 0; i < out.length; i++) {
    const r = pixels[4 * i] as number;
    const g = pixels[4 * i + 1] as number;
    const b = pixels[4 * i + 2] as number;
    out[i] = Math.round(0.299 * r + 0.587 * g + 0.114 * b);
  }
  return out;
}
