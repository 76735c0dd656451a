/**
 * Global test setup: build a toy dataset with the Python CLI, start a real
 * service process on a free port, and hand its coordinates to the test
 * files through a JSON file next to this one. Torn down when vitest exits.
 */

import { execFileSync, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync, writeFileSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO_ROOT = join(HERE, '..', '..');
const INFO_PATH = join(HERE, '.server-info.json');

let child: ChildProcess | null = null;
let workDir: string | null = null;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, '127.0.0.1', () => {
      const addr = srv.address();
      if (addr === null || typeof addr === 'string') {
        reject(new Error('could not allocate a port'));
        return;
      }
      const port = addr.port;
      srv.close(() => resolve(port));
    });
    srv.on('error', reject);
  });
}

async function waitForHealthz(baseUrl: string, stderrTail: () => string): Promise<void> {
  for (let i = 0; i < 120; i++) {
    if (child !== null && child.exitCode !== null) {
      throw new Error(`service exited with code ${child.exitCode}\n${stderrTail()}`);
    }
    try {
      const res = await fetch(`${baseUrl}/healthz`, {
        signal: AbortSignal.timeout(1000),
      });
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error(`service never became healthy at ${baseUrl}\n${stderrTail()}`);
}

export async function setup(): Promise<void> {
  workDir = mkdtempSync(join(tmpdir(), 'sie-client-test-'));
  const corpus = join(workDir, 'corpus');
  const dataDir = join(workDir, 'built');
  const logPath = join(workDir, 'episodes.jsonl');

  execFileSync(
    'python3',
    [join(REPO_ROOT, 'scripts', 'make_toy_data.py'), '--out', corpus],
    { stdio: 'pipe' },
  );
  execFileSync(
    'python3',
    [
      '-m', 'sie.cli', 'build',
      '--kg', join(corpus, 'kg.tsv'),
      '--qa', join(corpus, 'qa.jsonl'),
      '--out', dataDir,
      '--budget-tokens', '256',
      '--seed', '7',
    ],
    { stdio: 'pipe', cwd: REPO_ROOT },
  );

  const port = await freePort();
  const baseUrl = `http://127.0.0.1:${port}`;
  let stderrBuf = '';
  child = spawn(
    'python3',
    [
      '-m', 'sie.cli', 'serve',
      '--data', dataDir,
      '--bind', `127.0.0.1:${port}`,
      '--log', logPath,
    ],
    { cwd: REPO_ROOT, stdio: ['ignore', 'ignore', 'pipe'] },
  );
  child.stderr?.on('data', (chunk: Buffer) => {
    stderrBuf += chunk.toString();
  });

  await waitForHealthz(baseUrl, () => stderrBuf.slice(-2000));
  writeFileSync(INFO_PATH, JSON.stringify({ baseUrl, logPath, dataDir }));
}

export async function teardown(): Promise<void> {
  if (child !== null) {
    child.kill('SIGTERM');
    const gone = new Promise<void>((resolve) => {
      child!.once('exit', () => resolve());
    });
    const timeout = new Promise<void>((resolve) => setTimeout(resolve, 5000));
    await Promise.race([gone, timeout]);
    if (child.exitCode === null) child.kill('SIGKILL');
    child = null;
  }
  rmSync(INFO_PATH, { force: true });
  if (workDir !== null) {
    rmSync(workDir, { recursive: true, force: true });
    workDir = null;
  }
}
