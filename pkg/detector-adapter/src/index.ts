export {
  DEFAULT_ALLOWED_CLASSES,
  DetectionRecord,
  FrameEntry,
  SidecarDoc,
  detectionSchema,
  frameSchema,
  parseSidecar,
  serializeSidecar,
  sidecarSchema,
} from "./types";
export {
  Component,
  Mask,
  Point,
  connectedComponents,
  douglasPeucker,
  simplifyRing,
  traceBoundary,
} from "./geometry";
export { Raster, luminance, readPng, writePng } from "./png";
export {
  DEFAULT_OPTIONS,
  DetectorOptions,
  backgroundLevel,
  classifyShape,
  detectFrame,
  foregroundMask,
} from "./detect";
export {
  AdapterConfig,
  ScenarioOutcome,
  adapterConfigSchema,
  detectAndSegment,
  listFrames,
  listScenarios,
  runAdapter,
} from "./adapter";
export { runCli } from "./cli";
