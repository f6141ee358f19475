/** Client-side property curves from exported polynomial coefficients.
 * Horner evaluation in ascending-coefficient order, matching the service. */

export function evalPoly(coefficients: number[], z: number): number {
  let result = coefficients[coefficients.length - 1];
  for (let k = coefficients.length - 2; k >= 0; k--) {
    result = result * z + coefficients[k];
  }
  return result;
}

export interface CurvePoint {
  z: number;
  y: number;
}

export function sampleCurve(
  coefficients: number[],
  lo: number,
  hi: number,
  steps: number,
): CurvePoint[] {
  const points: CurvePoint[] = [];
  for (let k = 0; k < steps; k++) {
    const z = steps === 1 ? lo : lo + ((hi - lo) * k) / (steps - 1);
    points.push({ z, y: evalPoly(coefficients, z) });
  }
  return points;
}
