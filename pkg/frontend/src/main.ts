// DOM wiring: pointer events drive the pose, frames stream from the view
// service onto a canvas, with mode toggles and an fps/latency overlay.

import { fetchMeta, parseConfig, ServiceMeta } from './config';
import { Pose, pointerToPose, smoothPose } from './pose';
import { FrameFetcher, RenderMode, SimSession } from './session';
import { FrameStats } from './stats';

const cfg = parseConfig(window.location.search);

const canvas = document.getElementById('display') as HTMLCanvasElement;
const ctx = canvas.getContext('2d')!;
const overlay = document.getElementById('overlay')!;
const banner = document.getElementById('banner')!;
const modeBar = document.getElementById('modes')!;
const metaBox = document.getElementById('meta')!;

const stats = new FrameStats();
let meta: ServiceMeta | null = null;
let pose: Pose = { ax: 0, ay: 0 };
let shownPose: Pose = pose;
let clampedLast = false;

const fetchFrame: FrameFetcher = async (p, mode) => {
  const url = `${cfg.service}/view?ax=${p.ax.toFixed(5)}&ay=${p.ay.toFixed(5)}&mode=${mode}`;
  const res = await fetch(url, { cache: 'no-store' });
  if (!res.ok) throw new Error(`view request failed: ${res.status}`);
  return { blob: await res.blob(), clamped: res.headers.get('X-Pose-Clamped') === '1' };
};

const session = new SimSession(fetchFrame, {
  deadband: cfg.deadband,
  onFrame: (frame) => {
    banner.style.display = 'none';
    clampedLast = frame.clamped;
    shownPose = frame.pose;
    stats.record(performance.now(), frame.latencyMs);
    void createImageBitmap(frame.blob).then((bmp) => {
      if (canvas.width !== bmp.width || canvas.height !== bmp.height) {
        canvas.width = bmp.width;
        canvas.height = bmp.height;
      }
      ctx.drawImage(bmp, 0, 0);
    });
  },
  onError: () => {
    banner.textContent = `service unreachable at ${cfg.service} - retrying`;
    banner.style.display = 'block';
    window.setTimeout(() => session.requestPose(pose, true), 1000);
  },
});

canvas.parentElement!.addEventListener('pointermove', (ev) => {
  const box = (ev.currentTarget as HTMLElement).getBoundingClientRect();
  const target = pointerToPose(
    ev.clientX - box.left,
    ev.clientY - box.top,
    box.width,
    box.height,
    cfg.mirror,
  );
  pose = smoothPose(pose, target, cfg.smoothing);
  session.requestPose(pose);
});

function setMode(mode: RenderMode): void {
  session.setMode(mode);
  for (const btn of Array.from(modeBar.children) as HTMLButtonElement[]) {
    btn.classList.toggle('active', btn.dataset.mode === mode);
  }
}

for (const mode of ['composite', 'falsecolor', 'panels'] as RenderMode[]) {
  const btn = document.createElement('button');
  btn.textContent = mode;
  btn.dataset.mode = mode;
  btn.addEventListener('click', () => setMode(mode));
  modeBar.appendChild(btn);
}
setMode('composite');

window.setInterval(() => {
  const fps = stats.fps(performance.now()).toFixed(1);
  const lat = stats.meanLatencyMs().toFixed(0);
  overlay.textContent =
    `pose (${shownPose.ax.toFixed(2)}, ${shownPose.ay.toFixed(2)})` +
    `${clampedLast ? ' [clamped]' : ''}  ${fps} fps  ${lat} ms`;
}, 250);

void fetchMeta(cfg.service)
  .then((m) => {
    meta = m;
    const depths = m.layout.panelDepths.map((d) => d.toFixed(3)).join(', ');
    metaBox.textContent =
      `grid ${m.grid.V_y}x${m.grid.V_x}  blend ${m.blend}  ` +
      `panels [${depths}]  ${m.calibrated ? 'calibrated' : 'uncalibrated'}`;
    session.requestPose(pose, true);
  })
  .catch(() => {
    banner.textContent = `cannot reach ${cfg.service}/meta - is the service running?`;
    banner.style.display = 'block';
    window.setTimeout(() => window.location.reload(), 3000);
  });

export { meta, session };
