package shop;

public class Price {
    /**
     * Formats an amount given in cents as dollars and cents.
     */
    public String format(int cents) {
        // two digits after the point
        int dollars = cents / 100;
        int rest = cents % 100;
        String pad = rest < 10 ? "0" : "";
        return "$" + dollars + "." + pad + rest;
    }

    /**
     * Formats an amount given in cents behind a custom currency symbol.
     */
    public String format(int cents, String symbol) {
        return symbol + format(cents).substring(1);
    }

    public int round(int cents) {
        // rounds to the nearest multiple of ten cents
        return (cents + 5) / 10 * 10;
    }

    /** Zero. */
    public int zero() {
        return 0;
    }
}
