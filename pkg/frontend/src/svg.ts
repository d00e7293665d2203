/** Tiny dependency-free SVG assembly helpers. */

export interface Extent {
  min: number
  max: number
}

export function extentOf(values: number[], padFraction = 0.05): Extent {
  let min = Math.min(...values)
  let max = Math.max(...values)
  if (min === max) {
    min -= 1
    max += 1
  }
  const pad = (max - min) * padFraction
  return { min: min - pad, max: max + pad }
}

/** Affine map from a data extent onto pixel coordinates. */
export function scale(ext: Extent, pixelMin: number, pixelMax: number) {
  const span = ext.max - ext.min
  return (v: number) => pixelMin + ((v - ext.min) / span) * (pixelMax - pixelMin)
}

export function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

export class SvgBuilder {
  private parts: string[] = []

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    )
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, dash = '', width = 1) {
    const d = dash ? ` stroke-dasharray="${dash}"` : ''
    this.parts.push(
      `<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"${d}/>`,
    )
  }

  polyline(points: [number, number][], stroke: string, width = 1.5) {
    const attr = points.map(([x, y]) => `${r(x)},${r(y)}`).join(' ')
    this.parts.push(
      `<polyline points="${attr}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    )
  }

  circle(x: number, y: number, radius: number, fill: string) {
    this.parts.push(`<circle cx="${r(x)}" cy="${r(y)}" r="${radius}" fill="${fill}"/>`)
  }

  text(x: number, y: number, content: string, opts: { size?: number; fill?: string; anchor?: string } = {}) {
    const { size = 11, fill = '#222', anchor = 'start' } = opts
    this.parts.push(
      `<text x="${r(x)}" y="${r(y)}" font-size="${size}" fill="${fill}" ` +
        `text-anchor="${anchor}">${esc(content)}</text>`,
    )
  }

  rect(x: number, y: number, w: number, h: number, stroke: string) {
    this.parts.push(
      `<rect x="${r(x)}" y="${r(y)}" width="${r(w)}" height="${r(h)}" fill="none" stroke="${stroke}"/>`,
    )
  }

  render(): string {
    return this.parts.join('\n') + '\n</svg>\n'
  }
}

function r(v: number): string {
  return Number(v.toFixed(2)).toString()
}
