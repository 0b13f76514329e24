// Configuration parsed from URL query parameters.

export interface SimConfig {
  service: string;     // base URL of the view service
  mirror: boolean;     // flip x so moving right looks from the right
  smoothing: number;   // exponential pose smoothing factor in (0, 1]
  deadband: number;    // minimum pose delta before a new request
}

export const DEFAULTS: SimConfig = {
  service: 'http://127.0.0.1:8377',
  mirror: false,
  smoothing: 0.35,
  deadband: 0.004,
};

export function parseConfig(query: string, defaults: SimConfig = DEFAULTS): SimConfig {
  const q = new URLSearchParams(query);
  const num = (key: string, fallback: number, lo: number, hi: number): number => {
    const raw = q.get(key);
    if (raw === null) return fallback;
    const v = Number(raw);
    return Number.isFinite(v) ? Math.min(Math.max(v, lo), hi) : fallback;
  };
  return {
    service: (q.get('service') ?? defaults.service).replace(/\/+$/, ''),
    mirror: q.get('mirror') === '1' || q.get('mirror') === 'true',
    smoothing: num('smoothing', defaults.smoothing, 0.01, 1),
    deadband: num('deadband', defaults.deadband, 0, 0.25),
  };
}

export interface ServiceMeta {
  grid: { V_x: number; V_y: number };
  layout: { panelDepths: number[]; thresholds: number[] };
  modes: string[];
  blend: string;
  calibrated: boolean;
}

export async function fetchMeta(service: string): Promise<ServiceMeta> {
  const res = await fetch(`${service}/meta`);
  if (!res.ok) throw new Error(`meta request failed: ${res.status}`);
  return (await res.json()) as ServiceMeta;
}
