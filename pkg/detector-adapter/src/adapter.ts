import { existsSync, mkdirSync, readdirSync, statSync, writeFileSync } from "fs";
import { basename, join } from "path";
import { z } from "zod";

import { DEFAULT_OPTIONS, DetectorOptions, detectFrame } from "./detect";
import { readPng } from "./png";
import { DEFAULT_ALLOWED_CLASSES, FrameEntry, SidecarDoc, serializeSidecar } from "./types";

export const adapterConfigSchema = z.object({
  root: z.string().min(1),
  out: z.string().min(1),
  confidenceThreshold: z.number().gt(0).lt(1).default(0.5),
  allowedClasses: z.array(z.string().min(1)).min(1).default([...DEFAULT_ALLOWED_CLASSES]),
  // weight identifiers for a learned backend; the classical backend records
  // and ignores them
  detectorWeights: z.string().optional(),
  segmentationWeights: z.string().optional(),
});

export type AdapterConfig = z.infer<typeof adapterConfigSchema>;

export interface FrameFile {
  index: number;
  path: string;
}

export interface ScenarioOutcome {
  scenarioId: string;
  frames: number;
  skippedFrames: number;
  detections: number;
  outFile: string;
}

const FRAME_PATTERN = /^(\d+)\.png$/i;

/** Scenario directories are the children of root that contain a frames/ folder. */
export function listScenarios(root: string): string[] {
  const ids: string[] = [];
  for (const entry of readdirSync(root).sort()) {
    const dir = join(root, entry);
    if (statSync(dir).isDirectory() && existsSync(join(dir, "frames"))) {
      ids.push(entry);
    }
  }
  return ids;
}

export function listFrames(scenarioDir: string): FrameFile[] {
  const framesDir = join(scenarioDir, "frames");
  const frames: FrameFile[] = [];
  for (const name of readdirSync(framesDir)) {
    const match = FRAME_PATTERN.exec(basename(name));
    if (match) {
      frames.push({ index: parseInt(match[1] as string, 10), path: join(framesDir, name) });
    }
  }
  frames.sort((a, b) => a.index - b.index);
  return frames;
}

function detectorOptions(config: AdapterConfig): DetectorOptions {
  return {
    ...DEFAULT_OPTIONS,
    confidenceThreshold: config.confidenceThreshold,
    allowedClasses: config.allowedClasses,
  };
}

/**
 * Run detection over every frame of one scenario and assemble the sidecar
 * document. Frames that fail to decode are reported through `warn` and
 * skipped; frames without detections are left out of the document.
 */
export function detectAndSegment(
  config: AdapterConfig,
  scenarioId: string,
  warn: (message: string) => void = console.error
): { doc: SidecarDoc; frames: number; skippedFrames: number } {
  const options = detectorOptions(config);
  const frames = listFrames(join(config.root, scenarioId));
  if (frames.length === 0) {
    throw new Error(`${scenarioId}: no frames found`);
  }
  let imageSize: [number, number] | null = null;
  let skipped = 0;
  const entries: FrameEntry[] = [];
  for (const frame of frames) {
    try {
      const raster = readPng(frame.path);
      if (imageSize === null) {
        imageSize = [raster.width, raster.height];
      }
      const detections = detectFrame(raster, options);
      if (detections.length > 0) {
        entries.push({ index: frame.index, detections });
      }
    } catch (err) {
      skipped += 1;
      warn(`${scenarioId}: frame ${frame.index}: ${(err as Error).message}; skipped`);
    }
  }
  if (imageSize === null) {
    throw new Error(`${scenarioId}: no decodable frames`);
  }
  return {
    doc: { scenario_id: scenarioId, image_size: imageSize, frames: entries },
    frames: frames.length,
    skippedFrames: skipped,
  };
}

/** Process every scenario under the root, writing `<out>/<scenario_id>.json`. */
export function runAdapter(
  config: AdapterConfig,
  warn: (message: string) => void = console.error
): ScenarioOutcome[] {
  if (config.detectorWeights || config.segmentationWeights) {
    warn("classical backend active: weight identifiers are recorded but unused");
  }
  const scenarios = listScenarios(config.root);
  if (scenarios.length === 0) {
    throw new Error(`no scenarios under ${config.root}`);
  }
  mkdirSync(config.out, { recursive: true });
  const outcomes: ScenarioOutcome[] = [];
  for (const scenarioId of scenarios) {
    const { doc, frames, skippedFrames } = detectAndSegment(config, scenarioId, warn);
    const outFile = join(config.out, `${scenarioId}.json`);
    writeFileSync(outFile, serializeSidecar(doc), "utf-8");
    outcomes.push({
      scenarioId,
      frames,
      skippedFrames,
      detections: doc.frames.reduce((sum, f) => sum + f.detections.length, 0),
      outFile,
    });
  }
  return outcomes;
}
