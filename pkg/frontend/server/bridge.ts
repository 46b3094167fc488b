/**
 * Development server for the playground: serves the static UI and bridges
 * `POST /api` to a single long-lived `rill serve` child process, one request
 * at a time (the protocol is sequential; step sessions are stateful).
 */

import { fileURLToPath } from "node:url";
import path from "node:path";

import express from "express";

import type { ProtocolRequest, ProtocolResponse } from "../src/protocol.js";
import { SubprocessTransport } from "./subprocess.js";

// compiled location: frontend/dist/server/bridge.js
const here = path.dirname(fileURLToPath(import.meta.url));
const repoRoot = path.resolve(here, "..", "..", "..");

export function createApp(transport: SubprocessTransport): express.Express {
  const app = express();
  app.use(express.json({ limit: "4mb" }));

  let chain: Promise<unknown> = Promise.resolve();

  app.post("/api", (req, res) => {
    const request = req.body as ProtocolRequest;
    if (typeof request?.id !== "number" || typeof request?.cmd !== "string") {
      res.status(400).json({
        id: null,
        ok: false,
        error: { message: "request must carry numeric id and string cmd" },
      } satisfies ProtocolResponse);
      return;
    }
    const turn = chain.then(() => transport.send(request));
    chain = turn.catch(() => undefined);
    turn
      .then((response) => res.json(response))
      .catch((err: Error) =>
        res.status(502).json({
          id: request.id,
          ok: false,
          error: { message: `bridge failure: ${err.message}` },
        } satisfies ProtocolResponse),
      );
  });

  const frontendRoot = path.resolve(here, "..", "..");
  app.use("/js", express.static(path.join(frontendRoot, "dist", "src")));
  app.use(express.static(path.join(frontendRoot, "public")));
  return app;
}

function main(): void {
  const port = Number(process.env.PORT ?? 8173);
  const transport = new SubprocessTransport({ cwd: repoRoot });
  const app = createApp(transport);
  const server = app.listen(port, () => {
    console.log(`playground listening on http://localhost:${port}`);
  });
  const shutdown = (): void => {
    server.close();
    void transport.close().then(() => process.exit(0));
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

if (process.argv[1] && import.meta.url === `file://${process.argv[1]}`) {
  main();
}
