/**
 * Ray picking: the brush anchor is the frame point nearest to the pointer
 * ray, searched within a screen-space threshold around the cursor.
 */

import * as THREE from "three";

export interface PickResult {
  index: number;
  /** world position of the picked point */
  point: [number, number, number];
  /** distance from the camera along the view ray */
  depth: number;
}

const ndc = new THREE.Vector3();
const rayOrigin = new THREE.Vector3();
const rayDir = new THREE.Vector3();
const p = new THREE.Vector3();
const toPoint = new THREE.Vector3();

/**
 * @param pointerPx pointer position in canvas pixels (origin top-left)
 * @param thresholdPx max screen distance for a point to be considered
 *
 * Among points projecting within thresholdPx of the pointer, returns the one
 * nearest to the pointer ray in 3D; exact ties go to the point nearer the
 * camera. Null when nothing qualifies.
 */
export function pickBrushCenter(
  positions: Float32Array,
  camera: THREE.PerspectiveCamera,
  pointerPx: { x: number; y: number },
  viewportPx: { width: number; height: number },
  thresholdPx = 12,
): PickResult | null {
  camera.updateMatrixWorld();
  rayOrigin.setFromMatrixPosition(camera.matrixWorld);
  ndc.set(
    (pointerPx.x / viewportPx.width) * 2 - 1,
    -(pointerPx.y / viewportPx.height) * 2 + 1,
    0.5,
  );
  rayDir.copy(ndc).unproject(camera).sub(rayOrigin).normalize();

  let best: PickResult | null = null;
  let bestRayDist = Infinity;
  const count = positions.length / 3;
  for (let i = 0; i < count; i++) {
    p.set(positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]);
    toPoint.copy(p).sub(rayOrigin);
    const depth = toPoint.dot(rayDir);
    if (depth <= camera.near) continue;

    ndc.copy(p).project(camera);
    const sx = ((ndc.x + 1) / 2) * viewportPx.width;
    const sy = ((1 - ndc.y) / 2) * viewportPx.height;
    const dx = sx - pointerPx.x;
    const dy = sy - pointerPx.y;
    if (dx * dx + dy * dy > thresholdPx * thresholdPx) continue;

    const rayDist = Math.sqrt(Math.max(toPoint.lengthSq() - depth * depth, 0));
    if (
      rayDist < bestRayDist ||
      (rayDist === bestRayDist && best !== null && depth < best.depth)
    ) {
      bestRayDist = rayDist;
      best = { index: i, point: [p.x, p.y, p.z], depth };
    }
  }
  return best;
}
