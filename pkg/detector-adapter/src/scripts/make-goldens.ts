/**
 * Regenerate the committed golden fixtures and sidecars:
 *
 *   fixtures/<scenario>/frames/*.png   synthetic input frames
 *   golden/<scenario>.json             adapter output over those frames
 *
 * Everything here is deterministic, so a regeneration diff means the
 * detector's behavior changed.
 */
import { mkdirSync, rmSync } from "fs";
import { join } from "path";

import { adapterConfigSchema, runAdapter } from "../adapter";
import { Raster, writePng } from "../png";

const PKG_ROOT = join(__dirname, "..", "..");
const FIXTURES = join(PKG_ROOT, "fixtures");
const GOLDEN = join(PKG_ROOT, "golden");

const W = 64;
const H = 48;
const BG: [number, number, number] = [40, 40, 40];

function blankFrame(): Raster {
  const pixels = new Uint8Array(4 * W * H);
  for (let i = 0; i < W * H; i++) {
    pixels[4 * i] = BG[0];
    pixels[4 * i + 1] = BG[1];
    pixels[4 * i + 2] = BG[2];
    pixels[4 * i + 3] = 255;
  }
  return { width: W, height: H, pixels };
}

function fillRect(raster: Raster, x: number, y: number, w: number, h: number, rgb: [number, number, number]): void {
  for (let yy = y; yy < y + h; yy++) {
    for (let xx = x; xx < x + w; xx++) {
      const i = 4 * (yy * raster.width + xx);
      raster.pixels[i] = rgb[0];
      raster.pixels[i + 1] = rgb[1];
      raster.pixels[i + 2] = rgb[2];
    }
  }
}

function writeScenario(id: string, frames: Raster[]): void {
  const dir = join(FIXTURES, id, "frames");
  mkdirSync(dir, { recursive: true });
  frames.forEach((frame, i) => {
    writePng(join(dir, `${String(i).padStart(6, "0")}.png`), frame);
  });
}

function main(): void {
  rmSync(FIXTURES, { recursive: true, force: true });
  rmSync(GOLDEN, { recursive: true, force: true });

  // three still frames of pure background: the zero-detection case
  writeScenario("golden_blank", [blankFrame(), blankFrame(), blankFrame()]);

  // a wide car-like blob sliding right plus a static tall person-like blob
  const shapes: Raster[] = [];
  for (let i = 0; i < 3; i++) {
    const frame = blankFrame();
    fillRect(frame, 10 + 2 * i, 20, 16, 12, [200, 200, 200]);
    fillRect(frame, 45, 8, 5, 14, [180, 160, 160]);
    shapes.push(frame);
  }
  writeScenario("golden_shapes", shapes);

  const config = adapterConfigSchema.parse({ root: FIXTURES, out: GOLDEN });
  for (const outcome of runAdapter(config)) {
    console.log(
      `${outcome.scenarioId}: ${outcome.detections} detection(s) -> ${outcome.outFile}`
    );
  }
}

main();
