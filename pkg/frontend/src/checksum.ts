// Content digests shown next to the panels so determinism is visible: the
// identity pipeline must display matching original/augmented pixel digests.

const FNV_PRIME = 0x100000001b3n;
const FNV_OFFSET = 0xcbf29ce484222325n;
const U64 = (1n << 64n) - 1n;

export function fnv1a64Hex(data: Uint8Array): string {
  let hash = FNV_OFFSET;
  for (let i = 0; i < data.length; i++) {
    hash ^= BigInt(data[i]);
    hash = (hash * FNV_PRIME) & U64;
  }
  return hash.toString(16).padStart(16, "0");
}

export async function sha256Hex(data: Uint8Array): Promise<string> {
  const copy = new Uint8Array(data); // detached, aligned buffer for subtle
  const digest = await crypto.subtle.digest("SHA-256", copy);
  return [...new Uint8Array(digest)].map((b) => b.toString(16).padStart(2, "0")).join("");
}
