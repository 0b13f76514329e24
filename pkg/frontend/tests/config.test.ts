import { describe, expect, it } from 'vitest';
import { DEFAULTS, parseConfig } from '../src/config';

describe('parseConfig', () => {
  it('returns defaults for an empty query', () => {
    expect(parseConfig('')).toEqual(DEFAULTS);
  });

  it('parses service, mirror, smoothing and deadband', () => {
    const cfg = parseConfig('?service=http://localhost:9000/&mirror=1&smoothing=0.5&deadband=0.02');
    expect(cfg.service).toBe('http://localhost:9000');
    expect(cfg.mirror).toBe(true);
    expect(cfg.smoothing).toBe(0.5);
    expect(cfg.deadband).toBe(0.02);
  });

  it('clamps out-of-range numbers and ignores garbage', () => {
    const cfg = parseConfig('?smoothing=7&deadband=abc');
    expect(cfg.smoothing).toBe(1);
    expect(cfg.deadband).toBe(DEFAULTS.deadband);
  });
});
