import { z } from "zod";

/** The seven traffic participant classes kept by default. */
export const DEFAULT_ALLOWED_CLASSES: readonly string[] = [
  "person",
  "bicycle",
  "car",
  "motorcycle",
  "bus",
  "train",
  "truck",
];

const finiteNumber = z.number().finite();

const bboxSchema = z
  .tuple([finiteNumber, finiteNumber, finiteNumber, finiteNumber])
  .refine((b) => b[0] < b[2] && b[1] < b[3], {
    message: "degenerate bbox: requires x1 < x2 and y1 < y2",
  });

const contourSchema = z
  .array(z.tuple([finiteNumber, finiteNumber]))
  .min(3, "contour needs at least 3 vertices");

export const detectionSchema = z.object({
  class: z.string().min(1),
  confidence: z.number().min(0).max(1),
  bbox: bboxSchema,
  contour: contourSchema.nullable(),
  embedding: z.array(finiteNumber).optional(),
});

export const frameSchema = z.object({
  index: z.number().int().nonnegative(),
  detections: z.array(detectionSchema),
});

export const sidecarSchema = z.object({
  scenario_id: z.string().min(1),
  image_size: z.tuple([z.number().int().positive(), z.number().int().positive()]),
  frames: z.array(frameSchema),
});

export type DetectionRecord = z.infer<typeof detectionSchema>;
export type FrameEntry = z.infer<typeof frameSchema>;
export type SidecarDoc = z.infer<typeof sidecarSchema>;

export function parseSidecar(text: string): SidecarDoc {
  return sidecarSchema.parse(JSON.parse(text));
}

// Coordinates and confidences are doubles on the consumer side, so integral
// values must keep their ".0" to survive a parse/serialize round trip over
// there byte-for-byte. JS shortest-repr otherwise matches.
function num(v: number): string {
  if (Number.isInteger(v) && Number.isFinite(v)) {
    return `${v}.0`;
  }
  return String(v);
}

function numberList(values: readonly number[], pad: string): string {
  if (values.length === 0) {
    return "[]";
  }
  const inner = values.map((v) => `${pad}  ${num(v)}`).join(",\n");
  return `[\n${inner}\n${pad}]`;
}

function contourText(contour: DetectionRecord["contour"], pad: string): string {
  if (contour === null) {
    return "null";
  }
  const rings = contour.map((p) => `${pad}  ${numberList(p, `${pad}  `)}`).join(",\n");
  return `[\n${rings}\n${pad}]`;
}

function detectionText(det: DetectionRecord, pad: string): string {
  const lines = [
    `${pad}  "class": ${JSON.stringify(det.class)},`,
    `${pad}  "confidence": ${num(det.confidence)},`,
    `${pad}  "bbox": ${numberList(det.bbox, `${pad}  `)},`,
    `${pad}  "contour": ${contourText(det.contour, `${pad}  `)}`,
  ];
  if (det.embedding !== undefined) {
    lines[lines.length - 1] += ",";
    lines.push(`${pad}  "embedding": ${numberList(det.embedding, `${pad}  `)}`);
  }
  return `{\n${lines.join("\n")}\n${pad}}`;
}

function frameText(frame: FrameEntry, pad: string): string {
  const dets =
    frame.detections.length === 0
      ? "[]"
      : `[\n${frame.detections
          .map((d) => `${pad}    ${detectionText(d, `${pad}    `)}`)
          .join(",\n")}\n${pad}  ]`;
  return `{\n${pad}  "index": ${frame.index},\n${pad}  "detections": ${dets}\n${pad}}`;
}

/**
 * Canonical sidecar text: fixed key order, 2-space indent, trailing newline.
 * Serializing a parsed document reproduces the input byte-for-byte.
 */
export function serializeSidecar(doc: SidecarDoc): string {
  const frames =
    doc.frames.length === 0
      ? "[]"
      : `[\n${doc.frames.map((f) => `    ${frameText(f, "    ")}`).join(",\n")}\n  ]`;
  return (
    "{\n" +
    `  "scenario_id": ${JSON.stringify(doc.scenario_id)},\n` +
    `  "image_size": [\n    ${doc.image_size[0]},\n    ${doc.image_size[1]}\n  ],\n` +
    `  "frames": ${frames}\n` +
    "}\n"
  );
}
