/**
 * Split file text into slices of at most `linesPerChunk` lines.
 *
 * Mirrors the server's reassembly contract: concatenating the chunks
 * reproduces the input byte for byte, and every chunk except possibly the
 * last holds exactly `linesPerChunk` lines. Empty input has nothing to send.
 */
export function chunkFile(text: string, linesPerChunk = 10_000): string[] {
  if (linesPerChunk < 1) {
    throw new Error("linesPerChunk must be >= 1");
  }
  if (!text) {
    return [];
  }
  const parts = text.split("\n");
  const lines = parts.slice(0, -1).map((part) => part + "\n");
  const tail = parts[parts.length - 1];
  if (tail) {
    lines.push(tail);
  }
  const chunks: string[] = [];
  for (let i = 0; i < lines.length; i += linesPerChunk) {
    chunks.push(lines.slice(i, i + linesPerChunk).join(""));
  }
  return chunks;
}

export function readFileText(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(String(reader.result ?? ""));
    reader.onerror = () => reject(reader.error ?? new Error(`cannot read ${file.name}`));
    reader.readAsText(file);
  });
}
