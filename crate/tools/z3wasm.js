#!/usr/bin/env node
// SMT-LIB2 solver shim: reads a script from stdin, evaluates it with the
// WebAssembly build of Z3 (npm package `z3-solver`), and writes the solver
// output (check-sat answer, model, ...) to stdout.
//
// Usage: node z3wasm.js < query.smt2
// Install the dependency once with `npm install` in this directory.

"use strict";

const { init } = require("z3-solver");

async function main() {
  const chunks = [];
  for await (const chunk of process.stdin) chunks.push(chunk);
  const script = Buffer.concat(chunks).toString("utf8");

  const { Z3 } = await init();
  const ctx = Z3.mk_context(Z3.mk_config());
  const output = await Z3.eval_smtlib2_string(ctx, script);
  process.stdout.write(output);
  // Z3's worker threads keep the event loop alive; exit explicitly.
  process.exit(0);
}

main().catch((err) => {
  process.stderr.write(String(err) + "\n");
  process.exit(1);
});
