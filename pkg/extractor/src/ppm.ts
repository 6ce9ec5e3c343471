/** Binary PPM (P6) decoding and bilinear resizing. */

export interface Image {
  width: number;
  height: number;
  pixels: Float32Array; // RGB interleaved in [0, 1]
}

export function decodePpm(buf: Buffer): Image {
  let offset = 0;
  const token = (): string => {
    // skip whitespace and '#' comment lines between header fields
    for (;;) {
      while (offset < buf.length && /\s/.test(String.fromCharCode(buf[offset]))) offset++;
      if (offset < buf.length && buf[offset] === 0x23) {
        while (offset < buf.length && buf[offset] !== 0x0a) offset++;
      } else {
        break;
      }
    }
    const start = offset;
    while (offset < buf.length && !/\s/.test(String.fromCharCode(buf[offset]))) offset++;
    return buf.toString('ascii', start, offset);
  };
  if (token() !== 'P6') throw new Error('not a binary PPM (P6) file');
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(width > 0 && height > 0)) throw new Error('bad PPM dimensions');
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  offset++; // single whitespace after maxval
  const needed = width * height * 3;
  if (buf.length - offset < needed) {
    throw new Error(`truncated PPM: need ${needed} bytes, have ${buf.length - offset}`);
  }
  const pixels = new Float32Array(needed);
  for (let i = 0; i < needed; i++) pixels[i] = buf[offset + i] / 255;
  return { width, height, pixels };
}

export function encodePpm(image: Image): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, 'ascii');
  const body = Buffer.alloc(image.pixels.length);
  for (let i = 0; i < image.pixels.length; i++) {
    body[i] = Math.max(0, Math.min(255, Math.round(image.pixels[i] * 255)));
  }
  return Buffer.concat([header, body]);
}

export function resizeBilinear(image: Image, width: number, height: number): Image {
  const out = new Float32Array(width * height * 3);
  const xRatio = image.width / width;
  const yRatio = image.height / height;
  for (let y = 0; y < height; y++) {
    const srcY = Math.min((y + 0.5) * yRatio - 0.5, image.height - 1);
    const y0 = Math.max(Math.floor(srcY), 0);
    const y1 = Math.min(y0 + 1, image.height - 1);
    const fy = Math.max(srcY - y0, 0);
    for (let x = 0; x < width; x++) {
      const srcX = Math.min((x + 0.5) * xRatio - 0.5, image.width - 1);
      const x0 = Math.max(Math.floor(srcX), 0);
      const x1 = Math.min(x0 + 1, image.width - 1);
      const fx = Math.max(srcX - x0, 0);
      for (let c = 0; c < 3; c++) {
        const p00 = image.pixels[(y0 * image.width + x0) * 3 + c];
        const p01 = image.pixels[(y0 * image.width + x1) * 3 + c];
        const p10 = image.pixels[(y1 * image.width + x0) * 3 + c];
        const p11 = image.pixels[(y1 * image.width + x1) * 3 + c];
        const top = p00 * (1 - fx) + p01 * fx;
        const bottom = p10 * (1 - fx) + p11 * fx;
        out[(y * width + x) * 3 + c] = top * (1 - fy) + bottom * fy;
      }
    }
  }
  return { width, height, pixels: out };
}
