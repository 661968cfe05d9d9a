/**
 * JSON-over-HTTP server on node's built-in http module; no framework needed
 * for four routes, and zero runtime dependencies keeps deployment trivial.
 */

import http, { IncomingMessage, Server, ServerResponse } from "node:http";

import { UnknownTailError, entityScores } from "./messagePassing";
import { MAX_TEXT_LENGTH, embed, rerank } from "./vectors";

export interface SidecarConfig {
  /** Message-passing depth; overridable per request via "layers". */
  layers: number;
  /** When false, /entity_scores answers 501 and the capability is dropped. */
  gnnEnabled: boolean;
}

export const DEFAULT_CONFIG: SidecarConfig = { layers: 3, gnnEnabled: true };

interface Reply {
  status: number;
  body: unknown;
  headers?: Record<string, string>;
}

function ok(body: unknown, headers?: Record<string, string>): Reply {
  return { status: 200, body, headers };
}

function bad(message: string, status = 400): Reply {
  return { status, body: { error: message } };
}

function isStringList(x: unknown): x is string[] {
  return Array.isArray(x) && x.length > 0 && x.every((t) => typeof t === "string");
}

export function handleEmbed(body: any): Reply {
  const texts = body?.texts;
  if (!isStringList(texts)) return bad("texts must be a nonempty list of strings");
  const truncated = texts.filter((t) => t.length > MAX_TEXT_LENGTH).length;
  const headers = truncated > 0 ? { "X-Truncated": String(truncated) } : undefined;
  return ok({ vectors: embed(texts) }, headers);
}

export function handleRerank(body: any): Reply {
  const { query, documents } = body ?? {};
  if (typeof query !== "string") return bad("query must be a string");
  if (!isStringList(documents)) return bad("documents must be a nonempty list of strings");
  return ok({ scores: rerank(query, documents) });
}

export function handleEntityScores(body: any, cfg: SidecarConfig): Reply {
  if (!cfg.gnnEnabled) return bad("entity scoring not configured", 501);
  const { query, subgraph, source, tails } = body ?? {};
  const layers = body?.layers ?? cfg.layers;
  if (typeof query !== "string") return bad("query must be a string");
  if (typeof source !== "string") return bad("source must be a string");
  if (!isStringList(tails)) return bad("tails must be a nonempty list of strings");
  const triples = subgraph?.triples;
  if (!Array.isArray(triples)) return bad("subgraph.triples must be a list");
  if (!Number.isInteger(layers) || layers < 1) {
    return bad("layers must be a positive integer");
  }
  try {
    return ok({ scores: entityScores({ query, triples, source, tails, layers }) });
  } catch (err) {
    if (err instanceof UnknownTailError) return bad(err.message);
    throw err;
  }
}

function readBody(req: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

export function createServer(config: Partial<SidecarConfig> = {}): Server {
  const cfg: SidecarConfig = { ...DEFAULT_CONFIG, ...config };

  return http.createServer(async (req: IncomingMessage, res: ServerResponse) => {
    const send = (reply: Reply) => {
      res.writeHead(reply.status, {
        "Content-Type": "application/json",
        ...(reply.headers ?? {}),
      });
      res.end(JSON.stringify(reply.body));
    };

    if (req.method === "GET" && req.url === "/healthz") {
      const capabilities = ["triple_embed", "relation_rerank"];
      if (cfg.gnnEnabled) capabilities.push("entity_score");
      return send(ok({ status: "ok", capabilities, layers: cfg.layers }));
    }

    if (req.method !== "POST") return send(bad("not found", 404));

    let body: any;
    try {
      body = JSON.parse((await readBody(req)) || "null");
    } catch {
      return send(bad("invalid JSON body"));
    }

    switch (req.url) {
      case "/embed":
        return send(handleEmbed(body));
      case "/rerank":
        return send(handleRerank(body));
      case "/entity_scores":
        return send(handleEntityScores(body, cfg));
      default:
        return send(bad("not found", 404));
    }
  });
}
