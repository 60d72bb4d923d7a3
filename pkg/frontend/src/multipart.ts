// Minimal multipart/mixed reader for the preview responses. Parts are keyed
// by the name field of their Content-Disposition header.

export interface Part {
  contentType: string;
  data: Uint8Array;
}

function indexOfBytes(haystack: Uint8Array, needle: Uint8Array, from: number): number {
  outer: for (let i = from; i <= haystack.length - needle.length; i++) {
    for (let j = 0; j < needle.length; j++) {
      if (haystack[i + j] !== needle[j]) {
        continue outer;
      }
    }
    return i;
  }
  return -1;
}

const ascii = (text: string) => new TextEncoder().encode(text);
const decoder = new TextDecoder();

export function boundaryFromContentType(contentType: string): string {
  const match = /boundary=([^\s;]+)/.exec(contentType);
  if (!match) {
    throw new Error(`no boundary in content type: ${contentType}`);
  }
  return match[1];
}

export function parseMultipart(body: Uint8Array, contentType: string): Map<string, Part> {
  const boundary = boundaryFromContentType(contentType);
  const delimiter = ascii(`--${boundary}`);
  const headerEnd = ascii("\r\n\r\n");
  const parts = new Map<string, Part>();

  let cursor = indexOfBytes(body, delimiter, 0);
  while (cursor >= 0) {
    cursor += delimiter.length;
    // Closing delimiter is "--boundary--".
    if (body[cursor] === 0x2d && body[cursor + 1] === 0x2d) {
      break;
    }
    cursor += 2; // CRLF after the delimiter
    const headersUntil = indexOfBytes(body, headerEnd, cursor);
    if (headersUntil < 0) {
      throw new Error("multipart part without header terminator");
    }
    const headerText = decoder.decode(body.subarray(cursor, headersUntil));
    const nameMatch = /name="([^"]+)"/.exec(headerText);
    const typeMatch = /Content-Type:\s*([^\r\n]+)/i.exec(headerText);
    const dataStart = headersUntil + headerEnd.length;
    const next = indexOfBytes(body, delimiter, dataStart);
    if (next < 0) {
      throw new Error("multipart part without closing delimiter");
    }
    const data = body.subarray(dataStart, next - 2); // strip trailing CRLF
    if (nameMatch) {
      parts.set(nameMatch[1], {
        contentType: typeMatch ? typeMatch[1].trim() : "application/octet-stream",
        data,
      });
    }
    cursor = next;
  }
  return parts;
}
