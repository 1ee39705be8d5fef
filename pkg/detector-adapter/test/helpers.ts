import { mkdtempSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { Mask } from "../src/geometry";
import { Raster } from "../src/png";

export const BG: [number, number, number] = [40, 40, 40];

export function blankRaster(width = 64, height = 48, rgb: [number, number, number] = BG): Raster {
  const pixels = new Uint8Array(4 * width * height);
  for (let i = 0; i < width * height; i++) {
    pixels[4 * i] = rgb[0];
    pixels[4 * i + 1] = rgb[1];
    pixels[4 * i + 2] = rgb[2];
    pixels[4 * i + 3] = 255;
  }
  return { width, height, pixels };
}

export function fillRect(
  raster: Raster,
  x: number,
  y: number,
  w: number,
  h: number,
  rgb: [number, number, number] = [200, 200, 200]
): void {
  for (let yy = y; yy < y + h; yy++) {
    for (let xx = x; xx < x + w; xx++) {
      const i = 4 * (yy * raster.width + xx);
      raster.pixels[i] = rgb[0];
      raster.pixels[i + 1] = rgb[1];
      raster.pixels[i + 2] = rgb[2];
    }
  }
}

/** Build a mask from rows of "X" (foreground) and "." (background). */
export function maskFromRows(rows: string[]): Mask {
  const height = rows.length;
  const width = (rows[0] as string).length;
  const data = new Uint8Array(width * height);
  rows.forEach((row, y) => {
    for (let x = 0; x < width; x++) {
      data[y * width + x] = row[x] === "X" ? 1 : 0;
    }
  });
  return { width, height, data };
}

export function scratchDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}
