/**
 * Counter-based random numbers: draw t of stream (seed) is a pure
 * function of (seed, t), so regenerating any prefix or slice is
 * reproducible bit-for-bit across runs and platforms.
 *
 * Construction: the splitmix64 finalizer over 64-bit integers
 * (BigInt arithmetic, masked to 64 bits), two hashed words per draw,
 * mapped through Box-Muller to a standard normal.
 */

const MASK64 = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;
const SEED_SALT = 0xa0761d6478bd642fn;
const STREAM_SALT = 0xe7037ed1a0b428dbn;

export function splitmix64(x: bigint): bigint {
  x = (x + GOLDEN) & MASK64;
  x = ((x ^ (x >> 30n)) * MIX1) & MASK64;
  x = ((x ^ (x >> 27n)) * MIX2) & MASK64;
  return x ^ (x >> 31n);
}

function unitInterval(word: bigint): number {
  // top 53 bits, offset by half a step: strictly inside (0, 1)
  return (Number(word >> 11n) + 0.5) * 2 ** -53;
}

/** Standard normal draw number `counter` of the stream keyed by `seed`. */
export function counterNormal(seed: number, counter: number): number {
  const h0 = splitmix64(BigInt(seed) ^ SEED_SALT);
  const k1 = splitmix64(h0 ^ BigInt(counter));
  const k2 = splitmix64(k1 ^ STREAM_SALT);
  const u1 = unitInterval(k1);
  const u2 = unitInterval(k2);
  return Math.sqrt(-2 * Math.log(u1)) * Math.cos(2 * Math.PI * u2);
}

/** n consecutive draws starting at `offset`. */
export function counterNormals(seed: number, n: number, offset = 0): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = counterNormal(seed, offset + i);
  }
  return out;
}
