/** A compact conditional tabular GAN trained per concept chunk.
 *
 * Continuous columns are min-max scaled to [-1, 1] and produced by a
 * tanh-output generator; categorical columns become a one-hot condition
 * vector fed to both networks (sampled from the chunk's empirical joint
 * distribution at generation time, CTGAN-style training-by-sampling in
 * miniature). Networks are single-hidden-layer MLPs trained with Adam on
 * the non-saturating GAN loss.
 */

import { Rng } from "./rng.js";

class Dense {
  w: Float64Array; // out x in, row-major
  b: Float64Array;
  gw: Float64Array;
  gb: Float64Array;
  mw: Float64Array;
  vw: Float64Array;
  mb: Float64Array;
  vb: Float64Array;
  lastIn: Float64Array = new Float64Array(0);

  constructor(public inDim: number, public outDim: number, rng: Rng) {
    const scale = Math.sqrt(2.0 / inDim);
    this.w = new Float64Array(inDim * outDim).map(() => rng.normal() * scale);
    this.b = new Float64Array(outDim);
    this.gw = new Float64Array(inDim * outDim);
    this.gb = new Float64Array(outDim);
    this.mw = new Float64Array(inDim * outDim);
    this.vw = new Float64Array(inDim * outDim);
    this.mb = new Float64Array(outDim);
    this.vb = new Float64Array(outDim);
  }

  forward(x: Float64Array): Float64Array {
    this.lastIn = x;
    const out = new Float64Array(this.outDim);
    for (let o = 0; o < this.outDim; o++) {
      let acc = this.b[o];
      const base = o * this.inDim;
      for (let i = 0; i < this.inDim; i++) acc += this.w[base + i] * x[i];
      out[o] = acc;
    }
    return out;
  }

  backward(gradOut: Float64Array): Float64Array {
    const gradIn = new Float64Array(this.inDim);
    for (let o = 0; o < this.outDim; o++) {
      const g = gradOut[o];
      const base = o * this.inDim;
      this.gb[o] += g;
      for (let i = 0; i < this.inDim; i++) {
        this.gw[base + i] += g * this.lastIn[i];
        gradIn[i] += this.w[base + i] * g;
      }
    }
    return gradIn;
  }

  step(lr: number, t: number, batch: number): void {
    adam(this.w, this.gw, this.mw, this.vw, lr, t, batch);
    adam(this.b, this.gb, this.mb, this.vb, lr, t, batch);
    this.gw.fill(0);
    this.gb.fill(0);
  }
}

const BETA1 = 0.5; // GAN convention
const BETA2 = 0.999;
const EPS = 1e-8;

function adam(
  p: Float64Array,
  g: Float64Array,
  m: Float64Array,
  v: Float64Array,
  lr: number,
  t: number,
  batch: number,
): void {
  const c1 = 1 - Math.pow(BETA1, t);
  const c2 = 1 - Math.pow(BETA2, t);
  for (let i = 0; i < p.length; i++) {
    const grad = g[i] / batch;
    m[i] = BETA1 * m[i] + (1 - BETA1) * grad;
    v[i] = BETA2 * v[i] + (1 - BETA2) * grad * grad;
    p[i] -= (lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + EPS);
  }
}

function leakyRelu(x: Float64Array): Float64Array {
  const out = new Float64Array(x.length);
  for (let i = 0; i < x.length; i++) out[i] = x[i] > 0 ? x[i] : 0.2 * x[i];
  return out;
}

function leakyReluGrad(pre: Float64Array, grad: Float64Array): Float64Array {
  const out = new Float64Array(grad.length);
  for (let i = 0; i < grad.length; i++) out[i] = pre[i] > 0 ? grad[i] : 0.2 * grad[i];
  return out;
}

function sigmoid(z: number): number {
  return 1 / (1 + Math.exp(-z));
}

export interface GanConfig {
  epochs: number;
  batchSize: number;
  learningRate: number;
  zDim: number;
  hidden: number;
}

export const GAN_DEFAULTS: GanConfig = {
  epochs: 300,
  batchSize: 500,
  learningRate: 0.001,
  zDim: 16,
  hidden: 32,
};

/** Generator z (+cond) -> numeric block in [-1,1]; critic scores (x, cond). */
export class ConditionalGan {
  g1: Dense;
  g2: Dense;
  d1: Dense;
  d2: Dense;
  private g1pre: Float64Array = new Float64Array(0);
  private d1pre: Float64Array = new Float64Array(0);
  private steps = 0;

  constructor(
    public numDim: number,
    public condDim: number,
    public cfg: GanConfig,
    private rng: Rng,
  ) {
    this.g1 = new Dense(cfg.zDim + condDim, cfg.hidden, rng);
    this.g2 = new Dense(cfg.hidden, numDim, rng);
    this.d1 = new Dense(numDim + condDim, cfg.hidden, rng);
    this.d2 = new Dense(cfg.hidden, 1, rng);
  }

  generate(cond: Float64Array): Float64Array {
    const zin = new Float64Array(this.cfg.zDim + this.condDim);
    for (let i = 0; i < this.cfg.zDim; i++) zin[i] = this.rng.normal();
    zin.set(cond, this.cfg.zDim);
    const h = this.g1.forward(zin);
    this.g1pre = h;
    const raw = this.g2.forward(leakyRelu(h));
    const out = new Float64Array(this.numDim);
    for (let i = 0; i < this.numDim; i++) out[i] = Math.tanh(raw[i]);
    return out;
  }

  private criticLogit(x: Float64Array, cond: Float64Array): number {
    const input = new Float64Array(this.numDim + this.condDim);
    input.set(x);
    input.set(cond, this.numDim);
    const h = this.d1.forward(input);
    this.d1pre = h;
    return this.d2.forward(leakyRelu(h))[0];
  }

  /** BCE-on-logit gradient pushed back through the critic; returns the
   * gradient wrt the critic's numeric input block. */
  private criticBackward(logit: number, target: number): Float64Array {
    const gradLogit = new Float64Array([sigmoid(logit) - target]);
    const gh = this.d2.backward(gradLogit);
    const gin = this.d1.backward(leakyReluGrad(this.d1pre, gh));
    return gin.subarray(0, this.numDim) as Float64Array;
  }

  /** One alternating optimization pass over a (real rows, conds) batch. */
  trainBatch(reals: Float64Array[], conds: Float64Array[]): void {
    const n = reals.length;
    this.steps += 1;

    // critic: real up, fake down
    for (let i = 0; i < n; i++) {
      const logit = this.criticLogit(reals[i], conds[i]);
      this.criticBackward(logit, 1.0);
    }
    const fakes: Float64Array[] = [];
    for (let i = 0; i < n; i++) {
      const fake = this.generate(conds[i]);
      fakes.push(fake);
      const logit = this.criticLogit(fake, conds[i]);
      this.criticBackward(logit, 0.0);
    }
    this.d1.step(this.cfg.learningRate, this.steps, 2 * n);
    this.d2.step(this.cfg.learningRate, this.steps, 2 * n);

    // generator: fool the critic (non-saturating loss), critic frozen
    for (let i = 0; i < n; i++) {
      const fake = this.generate(conds[i]);
      const g1pre = this.g1pre;
      const logit = this.criticLogit(fake, conds[i]);
      const gradFake = this.criticBackward(logit, 1.0);
      this.d1.gw.fill(0); this.d1.gb.fill(0);
      this.d2.gw.fill(0); this.d2.gb.fill(0);
      // back through tanh into the generator
      const gRaw = new Float64Array(this.numDim);
      for (let j = 0; j < this.numDim; j++) gRaw[j] = gradFake[j] * (1 - fake[j] * fake[j]);
      const gh = this.g2.backward(gRaw);
      this.g1.backward(leakyReluGrad(g1pre, gh));
    }
    this.g1.step(this.cfg.learningRate, this.steps, n);
    this.g2.step(this.cfg.learningRate, this.steps, n);

    for (const layer of [this.g1, this.g2, this.d1, this.d2]) {
      for (let i = 0; i < layer.w.length; i++) {
        if (!Number.isFinite(layer.w[i])) throw new Error("training diverged (non-finite weight)");
      }
    }
  }
}
