import { createServer } from "./app";

const port = Number(process.env.SIDECAR_PORT ?? process.argv[2] ?? 8601);
const layers = Number(process.env.SIDECAR_LAYERS ?? 3);
const gnnEnabled = process.env.SIDECAR_GNN !== "0";

createServer({ layers, gnnEnabled }).listen(port, "127.0.0.1", () => {
  // the integration harness parses this line to learn the bound port
  console.log(`scorer sidecar listening on 127.0.0.1:${port}`);
});
