/**
 * Node-side transport: spawns the core's `serve` loop as a child process and
 * speaks the newline-delimited JSON protocol over its stdio.  Responses are
 * routed back to callers by request id; the loop itself answers strictly in
 * order.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface } from "node:readline";

import type {
  ProtocolRequest,
  ProtocolResponse,
  Transport,
} from "../src/protocol.js";

export interface SubprocessOptions {
  /** Command to launch; defaults to `python3 -m rill.cli serve`. */
  command?: string[];
  cwd?: string;
  env?: Record<string, string>;
}

export class SubprocessTransport implements Transport {
  private child: ChildProcessWithoutNullStreams;
  private pending = new Map<
    number,
    { resolve: (r: ProtocolResponse) => void; reject: (e: Error) => void }
  >();
  private closed = false;

  constructor(options: SubprocessOptions = {}) {
    const command = options.command ?? ["python3", "-m", "rill.cli", "serve"];
    this.child = spawn(command[0]!, command.slice(1), {
      cwd: options.cwd,
      env: { ...process.env, ...options.env },
      stdio: ["pipe", "pipe", "pipe"],
    });
    const lines = createInterface({ input: this.child.stdout });
    lines.on("line", (line) => this.dispatch(line));
    this.child.on("exit", () => this.failAll(new Error("serve process exited")));
    this.child.on("error", (err) => this.failAll(err));
  }

  private dispatch(line: string): void {
    let response: ProtocolResponse;
    try {
      response = JSON.parse(line) as ProtocolResponse;
    } catch {
      return; // not protocol traffic; ignore
    }
    if (response.id === null) {
      // a malformed request we sent — fail the oldest pending call
      const first = this.pending.entries().next();
      if (!first.done) {
        const [id, waiter] = first.value;
        this.pending.delete(id);
        waiter.resolve(response);
      }
      return;
    }
    const waiter = this.pending.get(response.id as number);
    if (waiter !== undefined) {
      this.pending.delete(response.id as number);
      waiter.resolve(response);
    }
  }

  private failAll(error: Error): void {
    if (this.closed) {
      return;
    }
    for (const waiter of this.pending.values()) {
      waiter.reject(error);
    }
    this.pending.clear();
  }

  send(request: ProtocolRequest): Promise<ProtocolResponse> {
    return new Promise((resolve, reject) => {
      if (this.closed || this.child.exitCode !== null) {
        reject(new Error("transport closed"));
        return;
      }
      this.pending.set(request.id, { resolve, reject });
      this.child.stdin.write(JSON.stringify(request) + "\n", (err) => {
        if (err) {
          this.pending.delete(request.id);
          reject(err);
        }
      });
    });
  }

  close(): Promise<void> {
    this.closed = true;
    return new Promise((resolve) => {
      if (this.child.exitCode !== null) {
        resolve();
        return;
      }
      this.child.once("exit", () => resolve());
      this.child.stdin.end();
      setTimeout(() => this.child.kill(), 1500).unref();
    });
  }
}
