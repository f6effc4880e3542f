// What-if flow against a real recmate service: upload the midday fixture,
// render its recommendation, admit it, and watch the displayed revision
// advance. The server is the actual Python process, not a mock.

import { spawn, execFileSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join, dirname } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import { formatKwh } from '../src/format.js';
import { renderCommunity, renderRecommendation } from '../src/render.js';

const here = dirname(fileURLToPath(import.meta.url));
const PYTHON = process.env.PYTHON ?? 'python3';

let workDir: string;
let server: ChildProcess | undefined;
let client: ApiClient;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.once('error', reject);
    srv.listen(0, '127.0.0.1', () => {
      const address = srv.address();
      if (address === null || typeof address === 'string') {
        reject(new Error('no port'));
        return;
      }
      srv.close(() => resolve(address.port));
    });
  });
}

async function waitHealthy(baseUrl: string, timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (server?.exitCode != null) {
      throw new Error(`server exited early with code ${server.exitCode}`);
    }
    try {
      const resp = await fetch(`${baseUrl}/api/health`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error('service did not become healthy');
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), 'recmate-dash-'));
  execFileSync(PYTHON, [join(here, 'fixtures', 'make_fixtures.py'), workDir], { stdio: 'inherit' });

  const port = await freePort();
  const baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(
    PYTHON,
    [
      '-m',
      'recmate.cli',
      'serve',
      '--community',
      join(workDir, 'community.json'),
      '--model',
      join(workDir, 'model.json'),
      '--snapshot',
      join(workDir, 'snapshot.json'),
      '--port',
      String(port),
      '--quiet',
    ],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  await waitHealthy(baseUrl);
  client = new ApiClient(baseUrl);
}, 120000);

afterAll(() => {
  server?.kill();
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe('what-if flow', () => {
  it('renders the ADMIT badge and the payload-formatted marginal, then admits', async () => {
    const csv = readFileSync(join(workDir, 'midday.csv'), 'utf-8');
    const created = await client.uploadCandidate(csv, 'midday');
    expect(created.candidate_id).toBe('midday');

    const rec = await client.whatif('midday');
    const recHtml = renderRecommendation(rec);
    expect(rec.decision).toBe('ADMIT');
    expect(recHtml).toContain('badge-admit');
    expect(recHtml).toContain('>ADMIT<');
    // the rendered number is exactly the formatted payload field
    expect(recHtml).toContain(formatKwh(rec.marginal_shared_kwh));
    expect(rec.marginal_shared_kwh).toBeGreaterThan(0);

    const before = await client.getCommunity();
    const beforeHtml = renderCommunity(before);
    expect(beforeHtml).toContain(`revision ${before.revision}`);

    const admitted = await client.admit('midday', before.revision);
    expect(admitted.revision).toBe(before.revision + 1);
    // coherence: the admitted community report matches the what-if leg
    expect(admitted.report.shared_energy).toBe(rec.with_candidate.shared_energy);

    const after = await client.getCommunity();
    expect(after.revision).toBe(before.revision + 1);
    const afterHtml = renderCommunity(after);
    expect(afterHtml).toContain(`revision ${before.revision + 1}`);
    expect(afterHtml).toContain('midday');
  }, 120000);

  it('rejects stale mutations with 409 and leaves state intact', async () => {
    const csv = readFileSync(join(workDir, 'midday.csv'), 'utf-8');
    await client.uploadCandidate(csv, 'stale-check');
    const { revision } = await client.getHealth();
    try {
      await client.reject('stale-check', revision + 7);
      expect.unreachable('stale If-Match must fail');
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(409);
    }
    // candidate still pending; a fresh revision succeeds
    const fresh = await client.getHealth();
    const rejected = await client.reject('stale-check', fresh.revision);
    expect(rejected.revision).toBe(fresh.revision + 1);
  }, 120000);

  it('surfaces domain errors with their module error name', async () => {
    const deadCsv = 'year,month,day,hour,kwh\n' +
      Array.from({ length: 48 }, (_, t) => `2023,1,${Math.floor(t / 24) + 2},${t % 24},0.0`).join('\n') + '\n';
    await client.uploadCandidate(deadCsv, 'dead');
    try {
      await client.whatif('dead');
      expect.unreachable('zero-consumption candidate must fail');
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(422);
      expect((err as ApiError).body.error).toBe('ZeroConsumption');
    }
  }, 120000);
});
