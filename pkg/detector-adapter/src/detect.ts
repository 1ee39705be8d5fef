import {
  Component,
  Mask,
  Point,
  connectedComponents,
  simplifyRing,
  traceBoundary,
} from "./geometry";
import { Raster, luminance } from "./png";
import { DEFAULT_ALLOWED_CLASSES, DetectionRecord } from "./types";

export interface DetectorOptions {
  /** minimum confidence kept, exclusive lower bound 0, inclusive upper 1 */
  confidenceThreshold: number;
  allowedClasses: readonly string[];
  /** |luma - background| above this is foreground */
  lumaTolerance: number;
  /** components smaller than this many pixels are noise */
  minArea: number;
  /** components narrower or shorter than this are noise */
  minSide: number;
  maxContourVertices: number;
  simplifyEpsilon: number;
}

export const DEFAULT_OPTIONS: DetectorOptions = {
  confidenceThreshold: 0.5,
  allowedClasses: DEFAULT_ALLOWED_CLASSES,
  lumaTolerance: 24,
  minArea: 12,
  minSide: 3,
  maxContourVertices: 200,
  simplifyEpsilon: 1.0,
};

/** Most frequent luma level; synthetic and static-camera frames are dominated by background. */
export function backgroundLevel(luma: Uint8Array): number {
  const hist = new Uint32Array(256);
  for (let i = 0; i < luma.length; i++) {
    const level = luma[i] as number;
    hist[level] = (hist[level] as number) + 1;
  }
  let best = 0;
  for (let level = 1; level < 256; level++) {
    if ((hist[level] as number) > (hist[best] as number)) {
      best = level;
    }
  }
  return best;
}

export function foregroundMask(raster: Raster, tolerance: number): Mask {
  const luma = luminance(raster);
  const bg = backgroundLevel(luma);
  const data = new Uint8Array(luma.length);
  for (let i = 0; i < luma.length; i++) {
    data[i] = Math.abs((luma[i] as number) - bg) > tolerance ? 1 : 0;
  }
  return { width: raster.width, height: raster.height, data };
}

/**
 * Shape-prior labeling: tall-and-narrow reads as a pedestrian, very wide as
 * a bus, anything else as a car. A stand-in for a learned classifier; the
 * label vocabulary stays inside the consumer's allowlist.
 */
export function classifyShape(width: number, height: number): string {
  if (height / width >= 1.6) {
    return "person";
  }
  if (width / height >= 2.8) {
    return "bus";
  }
  return "car";
}

function componentConfidence(comp: Component): number {
  const boxArea = (comp.maxX - comp.minX) * (comp.maxY - comp.minY);
  // solidity: solid shapes score 1, ragged or hollow ones fall off
  return boxArea > 0 ? comp.area / boxArea : 0;
}

function componentContour(
  mask: Mask,
  comp: Component,
  epsilon: number,
  maxVertices: number
): Point[] | null {
  const boundary = traceBoundary(mask, comp);
  if (boundary.length < 3) {
    return null;
  }
  const simplified = simplifyRing(boundary, epsilon, maxVertices);
  return simplified.length >= 3 ? simplified : null;
}

/** Detect blobs on one frame and package them as sidecar detection records. */
export function detectFrame(raster: Raster, options: DetectorOptions = DEFAULT_OPTIONS): DetectionRecord[] {
  const mask = foregroundMask(raster, options.lumaTolerance);
  const records: DetectionRecord[] = [];
  for (const comp of connectedComponents(mask)) {
    const width = comp.maxX - comp.minX;
    const height = comp.maxY - comp.minY;
    if (comp.area < options.minArea || width < options.minSide || height < options.minSide) {
      continue;
    }
    const confidence = componentConfidence(comp);
    if (confidence < options.confidenceThreshold) {
      continue;
    }
    const label = classifyShape(width, height);
    if (!options.allowedClasses.includes(label)) {
      continue;
    }
    const contour = componentContour(mask, comp, options.simplifyEpsilon, options.maxContourVertices);
    records.push({
      class: label,
      confidence,
      bbox: [comp.minX, comp.minY, comp.maxX, comp.maxY],
      contour,
    });
  }
  return records;
}
