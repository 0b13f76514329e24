// Pointer-to-pose mapping and pose filtering. Pure functions, no DOM.

export interface Pose {
  ax: number;
  ay: number;
}

export const clamp = (v: number, lo: number, hi: number): number =>
  Math.min(Math.max(v, lo), hi);

/**
 * Linear map of a pointer position inside a viewport to the angular square
 * [-0.5, 0.5]^2. With `mirror` the x axis is flipped so moving the pointer
 * right shows the scene from the right, like leaning around the display.
 */
export function pointerToPose(
  px: number,
  py: number,
  width: number,
  height: number,
  mirror = false,
): Pose {
  if (width <= 0 || height <= 0) throw new Error('viewport has no area');
  let ax = clamp(px / width - 0.5, -0.5, 0.5);
  const ay = clamp(py / height - 0.5, -0.5, 0.5);
  if (mirror) ax = -ax;
  return { ax, ay };
}

/** Exponential smoothing; alpha=1 follows the target instantly. */
export function smoothPose(prev: Pose, target: Pose, alpha: number): Pose {
  const a = clamp(alpha, 0, 1);
  return {
    ax: prev.ax + a * (target.ax - prev.ax),
    ay: prev.ay + a * (target.ay - prev.ay),
  };
}

/** True when the pose moved far enough to justify a new frame request. */
export function beyondDeadband(last: Pose, next: Pose, deadband: number): boolean {
  return (
    Math.abs(next.ax - last.ax) > deadband || Math.abs(next.ay - last.ay) > deadband
  );
}
