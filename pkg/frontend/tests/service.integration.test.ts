// @vitest-environment node
//
// End-to-end console loop against the real session service.  The suite
// trains a model, launches the service process, and drives the controller
// through the API exactly as the browser bundle does.
import { execFile, spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/client";
import { ConsoleController } from "../src/controller";
import type { Scene } from "../src/types";

const run = promisify(execFile);

const TWO_RED_SCENE: Scene = {
  board_size: 8,
  shapes: [
    { type: "cube", color: "red", x: 0, y: 0, z: 0 },
    { type: "cube", color: "red", x: 4, y: 4, z: 0 },
    { type: "cube", color: "yellow", x: 6, y: 6, z: 0 },
  ],
  gripper: null,
};

let workDir: string;
let service: ChildProcessWithoutNullStreams;
let serviceLog = "";
let baseUrl: string;
let commandPosts: number;

const countingFetch = (input: string, init?: RequestInit) => {
  if (input.endsWith("/command")) commandPosts++;
  return fetch(input, init);
};

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 150; attempt++) {
    if (service.exitCode !== null) {
      throw new Error(`service exited early:\n${serviceLog}`);
    }
    try {
      const response = await fetch(`${baseUrl}/api/session`, { method: "POST" });
      if (response.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service never came up:\n${serviceLog}`);
}

beforeAll(async () => {
  workDir = await mkdtemp(join(tmpdir(), "scene-console-"));
  const treebank = join(workDir, "treebank.jsonl");
  const model = join(workDir, "model");
  await run("losr", ["generate", "--count", "300", "--profile", "standard",
                     "--seed", "13", "--out", treebank]);
  await run("losr", ["train", "--treebank", treebank, "--out", model]);

  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  service = spawn("losr", ["serve", "--model", model,
                           "--host", "127.0.0.1", "--port", String(port)]);
  service.stdout.on("data", (chunk: Buffer) => { serviceLog += chunk.toString(); });
  service.stderr.on("data", (chunk: Buffer) => { serviceLog += chunk.toString(); });
  await waitForService();
});

afterAll(async () => {
  if (service !== undefined && service.exitCode === null) {
    service.kill("SIGTERM");
    await new Promise((resolve) => service.once("exit", resolve));
  }
  if (workDir !== undefined) await rm(workDir, { recursive: true, force: true });
});

function freshController(): { controller: ConsoleController; client: ApiClient } {
  commandPosts = 0;
  const client = new ApiClient(baseUrl, countingFetch);
  return { controller: new ConsoleController(client), client };
}

describe("console loop against the live service", () => {
  it("updates the rendered gripper within one request round trip", async () => {
    const { controller, client } = freshController();
    expect(await controller.start()).toBe(true);
    expect(controller.state.view!.gripper).toBeNull();

    const result = await controller.submit("pick up the red cube");

    expect(result.status).toBe("executed");
    expect(commandPosts).toBe(1);
    expect(controller.state.view!.gripper)
      .toEqual({ type: "cube", color: "red", highlighted: false });
    const redCell = controller.state.view!.cells[6]![1]!;
    expect(redCell.stack).toEqual([]);
    expect(redCell.marked).toBe(true);
    expect(controller.state.log[0]).toMatchObject({
      outcome: "executed",
      losr: "(event: (action: take) (entity: (color: red) (type: cube)))",
    });
    expect(controller.state.lastDiff).toEqual([]);
    expect(await client.getScene(controller.state.sessionId!))
      .toEqual(controller.state.scene);
  });

  it("highlights all candidate groundings of an ambiguous command "
     + "and leaves the scene unchanged", async () => {
    const { controller, client } = freshController();
    expect(await controller.start(TWO_RED_SCENE)).toBe(true);
    const before = controller.state.scene!;

    const result = await controller.submit("pick up the red cube");

    expect(result.status).toBe("rejected");
    expect(controller.state.log[0]!.outcome).toBe("ambiguous");
    expect(controller.state.highlights).toEqual(["0,0,0", "4,4,0"]);
    const highlighted = controller.state.view!.cells.flat()
      .flatMap((cell) => cell.stack)
      .filter((glyph) => glyph.highlighted);
    expect(highlighted).toEqual([
      { type: "cube", color: "red", highlighted: true },
      { type: "cube", color: "red", highlighted: true },
    ]);
    expect(controller.state.scene).toEqual(before);
    expect(controller.state.notice).toContain("ambiguous");
    expect(controller.state.lastDiff).toEqual([]);
    expect(await client.getScene(controller.state.sessionId!)).toEqual(before);
  });

  it("keeps the view-model diff empty after every response", async () => {
    const { controller } = freshController();
    const diffs: string[][] = [];
    const record = () => diffs.push([...controller.state.lastDiff]);

    expect(await controller.start()).toBe(true);
    const initial = controller.state.scene!;
    record();
    expect((await controller.submit("pick up the red cube")).status).toBe("executed");
    record();
    expect((await controller.submit("drop the cube on the yellow cube")).status)
      .toBe("executed");
    record();
    expect((await controller.submit("pick up the taupe cube")).status).toBe("rejected");
    record();
    expect(await controller.undo()).toBe(true);
    record();
    expect(await controller.undo()).toBe(true);
    record();
    expect(await controller.reset()).toBe(true);
    record();

    expect(diffs).toEqual([[], [], [], [], [], [], []]);
    expect(controller.state.log.map((entry) => entry.outcome))
      .toEqual(["executed", "executed", "oov"]);
    expect(controller.state.scene).toEqual(initial);
  });

  it("moves the red cube onto the yellow cube across two commands", async () => {
    const { controller } = freshController();
    await controller.start();
    await controller.submit("pick up the red cube");
    const result = await controller.submit("drop the cube on the yellow cube");

    expect(result.status).toBe("executed");
    expect(controller.state.view!.gripper).toBeNull();
    // The destination grounding highlights the yellow cube; the red cube
    // just landed on top of it and is no grounding itself.
    expect(controller.state.view!.cells[1]![6]!.stack).toEqual([
      { type: "cube", color: "yellow", highlighted: true },
      { type: "cube", color: "red", highlighted: false },
    ]);
    expect(controller.state.lastDiff).toEqual([]);
  });

  it("leaves no history to undo after a rejected command", async () => {
    const { controller } = freshController();
    await controller.start();
    expect((await controller.submit("cube cube cube")).status).toBe("rejected");
    expect(await controller.undo()).toBe(false);
    expect(controller.state.banner?.text).toContain("nothing-to-undo");
    expect(controller.state.lastDiff).toEqual([]);
  });
});
