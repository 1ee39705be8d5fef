/** Binary mask with row-major pixels, 1 = foreground. */
export interface Mask {
  width: number;
  height: number;
  data: Uint8Array;
}

export interface Component {
  /** pixel coordinates, exclusive right/bottom edge */
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
  area: number;
  pixels: number[]; // flat indices into the mask
}

export type Point = [number, number];

/**
 * 8-connected components over a binary mask, iterative flood fill.
 * Returned in raster order of their first pixel, which makes downstream
 * output ordering deterministic.
 */
export function connectedComponents(mask: Mask): Component[] {
  const { width, height, data } = mask;
  const labels = new Int32Array(width * height).fill(-1);
  const components: Component[] = [];
  const stack: number[] = [];

  for (let start = 0; start < data.length; start++) {
    if (data[start] === 0 || labels[start] !== -1) {
      continue;
    }
    const comp: Component = {
      minX: width,
      minY: height,
      maxX: 0,
      maxY: 0,
      area: 0,
      pixels: [],
    };
    const label = components.length;
    stack.push(start);
    labels[start] = label;
    while (stack.length > 0) {
      const idx = stack.pop() as number;
      const x = idx % width;
      const y = (idx - x) / width;
      comp.area += 1;
      comp.pixels.push(idx);
      if (x < comp.minX) comp.minX = x;
      if (y < comp.minY) comp.minY = y;
      if (x + 1 > comp.maxX) comp.maxX = x + 1;
      if (y + 1 > comp.maxY) comp.maxY = y + 1;
      for (let dy = -1; dy <= 1; dy++) {
        for (let dx = -1; dx <= 1; dx++) {
          if (dx === 0 && dy === 0) continue;
          const nx = x + dx;
          const ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const nidx = ny * width + nx;
          if (data[nidx] !== 0 && labels[nidx] === -1) {
            labels[nidx] = label;
            stack.push(nidx);
          }
        }
      }
    }
    components.push(comp);
  }
  return components;
}

// Moore neighborhood, clockwise starting east.
const MOORE: Point[] = [
  [1, 0],
  [1, 1],
  [0, 1],
  [-1, 1],
  [-1, 0],
  [-1, -1],
  [0, -1],
  [1, -1],
];

/**
 * Trace the outer boundary of one component with Moore-neighbor tracing
 * (Jacob's stopping criterion). Returns boundary pixel coordinates in
 * tracing order; a single-pixel component yields one point.
 */
export function traceBoundary(mask: Mask, comp: Component): Point[] {
  const { width, height, data } = mask;
  const inside = (x: number, y: number): boolean =>
    x >= 0 && y >= 0 && x < width && y < height && data[y * width + x] !== 0;

  // topmost-then-leftmost pixel; entry direction is from the west
  let sx = -1;
  let sy = -1;
  for (const idx of comp.pixels) {
    const x = idx % width;
    const y = (idx - x) / width;
    if (sy === -1 || y < sy || (y === sy && x < sx)) {
      sx = x;
      sy = y;
    }
  }
  if (comp.area === 1) {
    return [[sx, sy]];
  }

  const boundary: Point[] = [[sx, sy]];
  // backtrack points west of the start, so scanning starts at direction west+1
  let cx = sx;
  let cy = sy;
  let dir = 4; // index of the backtrack direction in MOORE
  let guard = 0;
  const limit = 4 * (comp.area + width * height);

  while (guard++ < limit) {
    let found = false;
    // probe clockwise from the pixel after the backtrack
    for (let i = 1; i <= 8; i++) {
      const probe = (dir + i) % 8;
      const [dx, dy] = MOORE[probe] as Point;
      const nx = cx + dx;
      const ny = cy + dy;
      if (inside(nx, ny)) {
        // next backtrack is the previous probe position
        dir = (probe + 4) % 8;
        cx = nx;
        cy = ny;
        found = true;
        break;
      }
    }
    if (!found) {
      break; // isolated pixel, handled above, defensive here
    }
    if (cx === sx && cy === sy) {
      break; // closed the loop
    }
    boundary.push([cx, cy]);
  }
  return boundary;
}

function perpendicularDistance(p: Point, a: Point, b: Point): number {
  const dx = b[0] - a[0];
  const dy = b[1] - a[1];
  const lenSq = dx * dx + dy * dy;
  if (lenSq === 0) {
    return Math.hypot(p[0] - a[0], p[1] - a[1]);
  }
  // distance from p to the infinite line through a, b
  return Math.abs(dy * p[0] - dx * p[1] + b[0] * a[1] - b[1] * a[0]) / Math.sqrt(lenSq);
}

/** Classic Douglas-Peucker over an open polyline. Keeps endpoints. */
export function douglasPeucker(points: Point[], epsilon: number): Point[] {
  if (points.length <= 2) {
    return points.slice();
  }
  const first = points[0] as Point;
  const last = points[points.length - 1] as Point;
  let maxDist = -1;
  let maxIdx = 0;
  for (let i = 1; i < points.length - 1; i++) {
    const d = perpendicularDistance(points[i] as Point, first, last);
    if (d > maxDist) {
      maxDist = d;
      maxIdx = i;
    }
  }
  if (maxDist <= epsilon) {
    return [first, last];
  }
  const left = douglasPeucker(points.slice(0, maxIdx + 1), epsilon);
  const right = douglasPeucker(points.slice(maxIdx), epsilon);
  return left.slice(0, -1).concat(right);
}

/**
 * Simplify a closed boundary ring: split at the two mutually farthest
 * points, simplify both chains, and rejoin. Epsilon doubles until the
 * result fits the vertex budget.
 */
export function simplifyRing(ring: Point[], epsilon: number, maxVertices: number): Point[] {
  if (ring.length <= 3) {
    return ring.slice();
  }
  let eps = epsilon;
  for (;;) {
    // anchor on the two farthest points so no real corner becomes an endpoint casualty
    let ai = 0;
    let bi = 0;
    let best = -1;
    for (let i = 0; i < ring.length; i++) {
      for (let j = i + 1; j < ring.length; j++) {
        const p = ring[i] as Point;
        const q = ring[j] as Point;
        const d = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2;
        if (d > best) {
          best = d;
          ai = i;
          bi = j;
        }
      }
    }
    const chainA = ring.slice(ai, bi + 1);
    const chainB = ring.slice(bi).concat(ring.slice(0, ai + 1));
    const simpleA = douglasPeucker(chainA, eps);
    const simpleB = douglasPeucker(chainB, eps);
    const joined = simpleA.slice(0, -1).concat(simpleB.slice(0, -1));
    if (joined.length <= maxVertices) {
      return joined;
    }
    eps *= 2;
  }
}
