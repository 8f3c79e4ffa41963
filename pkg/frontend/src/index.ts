// Bindings for the diffcd collision-detection engine.  The engine is driven
// through its command-line interface; every call spawns one `diffcd`
// subcommand and parses its CSV output.  Set DIFFCD_BIN to override the
// executable (default "diffcd" on PATH).

import { spawnSync } from "node:child_process";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // x y z w, scalar last

export type Shape =
  | { kind: "sphere"; radius: number }
  | { kind: "ellipsoid"; semiAxes: Vec3 }
  | { kind: "box"; halfExtents: Vec3 }
  | { kind: "capsule"; halfLength: number; radius: number }
  | { kind: "mesh"; path: string };

export interface Pose {
  translation: Vec3;
  quaternion: Quat;
}

export interface ProximityResult {
  signedDistance: number;
  colliding: boolean;
  witness1: Vec3;
  witness2: Vec3;
  witness2Local: Vec3;
  iterations: number;
  flags: boolean; // numerical-failure flags were raised (exit code 2)
}

export type EstimatorSpec =
  | { kind: "fd"; eps?: number }
  | { kind: "zeroth"; samples?: number; eps?: number; seed?: number }
  | { kind: "analytic" }
  | { kind: "gaussian"; samples?: number; eps?: number; seed?: number }
  | { kind: "gumbel"; eps?: number; nl?: number };

export interface Jacobians {
  dW1: number[][]; // 3x6
  dW2: number[][]; // 3x6
  dSep: number[][]; // 3x6
  flags: boolean;
}

/** Engine-side failure, carrying the engine's error class name. */
export class EngineError extends Error {
  constructor(name: string, message: string) {
    super(message);
    this.name = name;
  }
}

export function makeShape(kind: Shape["kind"], params: number[] | string): Shape {
  switch (kind) {
    case "sphere":
      return { kind, radius: (params as number[])[0] };
    case "ellipsoid":
      return { kind, semiAxes: (params as number[]).slice(0, 3) as Vec3 };
    case "box":
      return { kind, halfExtents: (params as number[]).slice(0, 3) as Vec3 };
    case "capsule":
      return { kind, halfLength: (params as number[])[0], radius: (params as number[])[1] };
    case "mesh":
      return { kind, path: params as string };
  }
}

export function loadObj(path: string): Shape {
  return { kind: "mesh", path };
}

export function shapeSpec(s: Shape): string {
  switch (s.kind) {
    case "sphere":
      return `sphere:${s.radius}`;
    case "ellipsoid":
      return `ellipsoid:${s.semiAxes.join(",")}`;
    case "box":
      return `box:${s.halfExtents.join(",")}`;
    case "capsule":
      return `capsule:${s.halfLength},${s.radius}`;
    case "mesh":
      return `mesh:${s.path}`;
  }
}

export function poseSpec(p: Pose): string {
  return [...p.translation, ...p.quaternion].join(" ");
}

export interface CliRun {
  stdout: string;
  flags: boolean;
}

export function runCli(args: string[]): CliRun {
  const bin = process.env.DIFFCD_BIN ?? "diffcd";
  const proc = spawnSync(bin, args, { encoding: "utf8" });
  if (proc.error) throw proc.error;
  if (proc.status === 0 || proc.status === 2) {
    return { stdout: proc.stdout, flags: proc.status === 2 };
  }
  const m = /^error: (\w+): (.*)$/m.exec(proc.stderr);
  if (m) throw new EngineError(m[1], m[2]);
  throw new EngineError("UsageError", proc.stderr.trim() || `exit code ${proc.status}`);
}

function kvRows(stdout: string): Map<string, string[]> {
  const rows = new Map<string, string[]>();
  for (const line of stdout.trim().split("\n")) {
    const cells = line.split(",");
    rows.set(cells[0], cells.slice(1));
  }
  return rows;
}

function vec3(cells: string[]): Vec3 {
  return [Number(cells[0]), Number(cells[1]), Number(cells[2])];
}

export function parseQueryOutput(run: CliRun): ProximityResult {
  const rows = kvRows(run.stdout);
  const get = (key: string): string[] => {
    const v = rows.get(key);
    if (!v) throw new EngineError("ParseError", `missing '${key}' in query output`);
    return v;
  };
  return {
    signedDistance: Number(get("signed_distance")[0]),
    colliding: get("colliding")[0] === "1",
    witness1: vec3(get("witness1")),
    witness2: vec3(get("witness2")),
    witness2Local: vec3(get("witness2_local")),
    iterations: Number(get("iterations")[0]),
    flags: run.flags,
  };
}

export function proximity(shape1: Shape, shape2: Shape, pose: Pose): ProximityResult {
  const run = runCli([
    "query",
    "--shape1", shapeSpec(shape1),
    "--shape2", shapeSpec(shape2),
    "--pose", poseSpec(pose),
  ]);
  return parseQueryOutput(run);
}

export function estimatorArgs(est: EstimatorSpec): string[] {
  const args = ["--estimator", est.kind];
  if ("eps" in est && est.eps !== undefined) args.push("--eps", String(est.eps));
  if ("samples" in est && est.samples !== undefined) args.push("--samples", String(est.samples));
  if ("seed" in est && est.seed !== undefined) args.push("--seed", String(est.seed));
  if ("nl" in est && est.nl !== undefined) args.push("--nl", String(est.nl));
  return args;
}

export function parseGradOutput(run: CliRun): Jacobians {
  const lines = run.stdout.trim().split("\n");
  if (lines[0] !== "matrix,row,c0,c1,c2,c3,c4,c5") {
    throw new EngineError("ParseError", `unexpected grad header: ${lines[0]}`);
  }
  const mats: Record<string, number[][]> = {};
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    (mats[cells[0]] ??= []).push(cells.slice(2).map(Number));
  }
  for (const name of ["d_w1_dq", "d_w2_dq", "d_sep_dq"]) {
    if (!mats[name] || mats[name].length !== 3) {
      throw new EngineError("ParseError", `missing or malformed matrix '${name}'`);
    }
  }
  return { dW1: mats.d_w1_dq, dW2: mats.d_w2_dq, dSep: mats.d_sep_dq, flags: run.flags };
}

export function jacobians(
  shape1: Shape,
  shape2: Shape,
  pose: Pose,
  estimator: EstimatorSpec,
): Jacobians {
  const run = runCli([
    "grad",
    "--shape1", shapeSpec(shape1),
    "--shape2", shapeSpec(shape2),
    "--pose", poseSpec(pose),
    ...estimatorArgs(estimator),
  ]);
  return parseGradOutput(run);
}

/** Generate a rough polyhedral-ellipsoid OBJ and return it as a mesh shape. */
export function generateMesh(outPath: string, seed = 0, vertices = 12): Shape {
  runCli(["gen-mesh", "--seed", String(seed), "--vertices", String(vertices), "--out", outPath]);
  return { kind: "mesh", path: outPath };
}
